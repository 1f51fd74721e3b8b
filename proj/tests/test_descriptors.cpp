#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gcreg/descriptors.hpp"
#include "gcreg/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gcreg;
using namespace testing_support;

namespace {
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_CASE("ppf fixtures") {
  const auto q = ppf({0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {0, 0, 1});
  CHECK(q.angle1 == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(q.angle2 == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(q.angle3 == 0.0);
  CHECK(q.distance == 1.0);

  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto r = ppf(random_vec(rng), {0, 0, 1}, random_vec(rng), {0, 0, -1});
    CHECK(r.angle3 == doctest::Approx(kPi).epsilon(1e-15));
  }
  const auto zero = ppf({1, 2, 3}, {0, 0, 1}, {1, 2, 3}, {1, 0, 0});
  CHECK(zero.distance == 0.0);
  CHECK(zero.angle1 == 0.0);
}

TEST_CASE("ppf invariance and symmetry") {
  Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 pi = random_vec(rng), pj = random_vec(rng);
    const Vec3 ni = random_unit(rng), nj = random_unit(rng);
    const RigidTransform t = random_transform(rng, 3.0);
    const auto a = ppf(pi, ni, pj, nj);
    const auto b = ppf(t.apply(pi), t.rotate(ni), t.apply(pj), t.rotate(nj));
    CHECK(std::abs(a.angle1 - b.angle1) < 1e-9);
    CHECK(std::abs(a.angle2 - b.angle2) < 1e-9);
    CHECK(std::abs(a.angle3 - b.angle3) < 1e-9);
    CHECK(std::abs(a.distance - b.distance) < 1e-9);
    for (double v : {a.angle1, a.angle2, a.angle3}) CHECK((v >= 0.0 && v <= kPi));
    const auto s = ppf(pj, nj, pi, ni);
    CHECK(s.angle3 == a.angle3);
    CHECK(s.distance == a.distance);
  }
}

TEST_CASE("fpfh equals a double-loop oracle") {
  Rng rng(3);
  for (int inst = 0; inst < 10; ++inst) {
    const PointCloud c = with_random_normals(random_cloud(rng, 30), rng);
    const double r = 0.5;
    const DescriptorSet d = fpfh(c, r, {.bins = 11});
    const auto expect = oracles::fpfh(c, r, 11);
    REQUIRE(d.dimension == 33);
    REQUIRE(d.values.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(d.values[i] - expect[i]) < 1e-9);
  }
}

TEST_CASE("fpfh structure") {
  Rng rng(4);
  PointCloud c = with_random_normals(random_cloud(rng, 200), rng);
  c.points.push_back({50, 50, 50});
  c.normals.push_back({0, 0, 1});
  const DescriptorSet d = fpfh(c, 0.3, {.bins = 11, .threads = 2});
  REQUIRE(d.empty_points.size() == 1);
  CHECK(d.empty_points[0] == 200);
  for (double v : d.row(200)) CHECK(v == 0.0);
  for (std::size_t i = 0; i < 200; ++i) {
    for (int s = 0; s < 3; ++s) {
      double sum = 0.0;
      for (int b = 0; b < 11; ++b) {
        CHECK(d.row(i)[s * 11 + b] >= 0.0);
        sum += d.row(i)[s * 11 + b];
      }
      CHECK(std::abs(sum - 100.0) < 1e-6);
    }
  }
  const DescriptorSet serial = fpfh(c, 0.3, {.bins = 11, .threads = 1});
  CHECK(serial.values == d.values);

  CHECK_THROWS_AS(fpfh(c, 0.0), Error);
  CHECK_THROWS_AS(fpfh(c, 0.3, {.bins = 1}), Error);
  PointCloud bare = c;
  bare.normals.clear();
  CHECK_THROWS_AS(fpfh(bare, 0.3), Error);
}

TEST_CASE("fpfh rigid invariance") {
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const PointCloud c = with_random_normals(random_cloud(rng, 50), rng);
    const RigidTransform t = random_transform(rng, 2.0);
    const DescriptorSet a = fpfh(c, 0.4);
    const DescriptorSet b = fpfh(apply_transform(c, t), 0.4);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-6);
  }
}

TEST_CASE("multiscale fpfh") {
  Rng rng(6);
  const PointCloud c = with_random_normals(random_cloud(rng, 80), rng);
  const auto m = multiscale_fpfh(c, 0.025, {15, 10, 5});
  REQUIRE(m.level_count() == 3);
  CHECK(m.radii[0] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(m.radii[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.radii[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(m.levels[0].level == 1);
  CHECK(m.levels[2].level == 3);
  CHECK(m.point_count() == 80);
  CHECK(m.levels[0].values == fpfh(c, 15 * 0.025, {.bins = 11}).values);

  const auto one = multiscale_fpfh(c, 0.025, {5});
  REQUIRE(one.level_count() == 1);
  CHECK(one.levels[0].values == fpfh(c, 5 * 0.025).values);

  CHECK_THROWS_AS(multiscale_fpfh(c, 0.025, {5, 10}), Error);
  CHECK_THROWS_AS(multiscale_fpfh(c, 0.025, {}), Error);
}
