#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "gcreg/cloud.hpp"
#include "gcreg/random.hpp"

namespace testing_support {

using gcreg::Mat3;
using gcreg::Vec3;

inline Vec3 random_vec(gcreg::Rng& rng, double lo = -1.0, double hi = 1.0) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline Vec3 random_unit(gcreg::Rng& rng) {
  Vec3 v;
  do {
    v = random_vec(rng);
  } while (v.norm() < 1e-3 || v.norm() > 1.0);
  return v.normalized();
}

/// Uniform rotation from a random unit quaternion.
inline Mat3 random_rotation(gcreg::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline gcreg::RigidTransform random_transform(gcreg::Rng& rng, double max_t = 1.0) {
  return {random_rotation(rng), random_vec(rng, -max_t, max_t)};
}

inline gcreg::PointCloud random_cloud(gcreg::Rng& rng, std::size_t n, double extent = 1.0) {
  gcreg::PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back(random_vec(rng, 0.0, extent));
  return c;
}

inline gcreg::PointCloud with_random_normals(gcreg::PointCloud c, gcreg::Rng& rng) {
  c.normals.clear();
  for (std::size_t i = 0; i < c.size(); ++i) c.normals.push_back(random_unit(rng));
  return c;
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace testing_support
