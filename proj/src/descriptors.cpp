#include "gcreg/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "gcreg/error.hpp"
#include "gcreg/parallel.hpp"

namespace gcreg {

double vector_angle(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate near 0 and π where acos loses half its digits.
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

PpfQuadruple ppf(const Vec3& pi, const Vec3& ni, const Vec3& pj, const Vec3& nj) {
  const Vec3 d = pj - pi;
  const double dist = d.norm();
  if (dist == 0.0) return {};
  return {vector_angle(d, ni), vector_angle(d, nj), vector_angle(ni, nj), dist};
}

bool fpfh_pair_angles(const Vec3& ps, const Vec3& ns, const Vec3& pt, const Vec3& nt,
                      PairAngles& out) {
  Vec3 dp = pt - ps;
  const double dist = dp.norm();
  if (dist == 0.0) return false;
  dp /= dist;

  // The point whose normal makes the smaller angle with the connecting line
  // becomes the frame origin; on a tie the first point keeps it.
  const double cos_s = ns.dot(dp);
  const double cos_t = nt.dot(dp);
  Vec3 u = ns;
  Vec3 other = nt;
  double phi = cos_s;
  if (std::abs(cos_s) < std::abs(cos_t)) {
    u = nt;
    other = ns;
    dp = -dp;
    phi = -cos_t;
  }
  Vec3 v = dp.cross(u);
  const double v_norm = v.norm();
  if (v_norm == 0.0) {
    out = {0.0, 0.0, phi};
    return true;
  }
  v /= v_norm;
  const Vec3 w = u.cross(v);
  out.alpha = v.dot(other);
  out.phi = phi;
  out.theta = std::atan2(w.dot(other), u.dot(other));
  return true;
}

std::size_t theta_bin(double theta, std::size_t bins) {
  const double f = std::floor(static_cast<double>(bins) * (theta + std::numbers::pi) /
                              (2.0 * std::numbers::pi));
  return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(bins - 1)));
}

std::size_t cosine_bin(double value, std::size_t bins) {
  const double f = std::floor(static_cast<double>(bins) * (value + 1.0) * 0.5);
  return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(bins - 1)));
}

DescriptorSet fpfh(const PointCloud& cloud, double radius, const FpfhOptions& options) {
  require(cloud.has_normals() && cloud.normals.size() == cloud.size(),
          "fpfh requires a cloud with normals");
  require(radius > 0.0, "fpfh radius must be positive");
  require(options.bins >= 2 && options.bins <= 255, "fpfh needs 2 to 255 bins per feature");
  require(!cloud.empty(), "fpfh on an empty cloud");

  const std::size_t n = cloud.size();
  const std::size_t bins = options.bins;
  const std::size_t dim = 3 * bins;
  const SpatialIndex index(cloud);

  // Neighbours at strictly positive distance; the pair features are undefined
  // for coincident points.
  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<std::vector<double>> distances(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    for (std::size_t j : index.radius(cloud.points[i], radius)) {
      if (j == i) continue;
      const double d = (cloud.points[j] - cloud.points[i]).norm();
      if (d == 0.0) continue;
      neighbors[i].push_back(j);
      distances[i].push_back(d);
    }
  });

  // Swapping the two points selects the same frame unless |cos| ties, so each
  // unordered pair is evaluated once and binned into both histograms.
  struct PairBins {
    std::uint32_t j;
    std::uint8_t theta, alpha, phi;
    bool valid;
  };
  std::vector<std::vector<PairBins>> forward(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const Vec3& pi = cloud.points[i];
    const Vec3& ni = cloud.normals[i];
    for (std::size_t j : neighbors[i]) {
      if (j < i) continue;
      PairAngles a;
      PairBins b{static_cast<std::uint32_t>(j), 0, 0, 0, false};
      if (fpfh_pair_angles(pi, ni, cloud.points[j], cloud.normals[j], a)) {
        b = {b.j, static_cast<std::uint8_t>(theta_bin(a.theta, bins)),
             static_cast<std::uint8_t>(cosine_bin(a.alpha, bins)),
             static_cast<std::uint8_t>(cosine_bin(a.phi, bins)), true};
      }
      forward[i].push_back(b);
    }
  });

  std::vector<double> spfh(n * dim, 0.0);
  const auto add = [&](std::size_t i, std::size_t t, std::size_t al, std::size_t ph) {
    double* h = spfh.data() + i * dim;
    const double increment = 100.0 / static_cast<double>(neighbors[i].size());
    h[t] += increment;
    h[bins + al] += increment;
    h[2 * bins + ph] += increment;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (const PairBins& b : forward[i]) {
      if (!b.valid) continue;
      add(i, b.theta, b.alpha, b.phi);
      Vec3 dp = cloud.points[b.j] - cloud.points[i];
      dp /= dp.norm();
      if (std::abs(cloud.normals[i].dot(dp)) == std::abs(cloud.normals[b.j].dot(dp))) {
        PairAngles r;
        fpfh_pair_angles(cloud.points[b.j], cloud.normals[b.j], cloud.points[i], cloud.normals[i], r);
        add(b.j, theta_bin(r.theta, bins), cosine_bin(r.alpha, bins), cosine_bin(r.phi, bins));
      } else {
        add(b.j, b.theta, b.alpha, b.phi);
      }
    }
  }

  DescriptorSet out;
  out.dimension = dim;
  out.values.assign(n * dim, 0.0);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const auto& nb = neighbors[i];
    if (nb.empty()) return;
    double* f = out.values.data() + i * dim;
    const double* self = spfh.data() + i * dim;
    const double inv_k = 1.0 / static_cast<double>(nb.size());
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const double w = 1.0 / distances[i][k];
      const double* __restrict other = spfh.data() + nb[k] * dim;
      for (std::size_t b = 0; b < dim; ++b) f[b] += w * other[b];
    }
    for (std::size_t b = 0; b < dim; ++b) f[b] = self[b] + inv_k * f[b];
    for (std::size_t s = 0; s < 3; ++s) {
      double sum = 0.0;
      for (std::size_t b = 0; b < bins; ++b) sum += f[s * bins + b];
      if (sum > 0.0)
        for (std::size_t b = 0; b < bins; ++b) f[s * bins + b] *= 100.0 / sum;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    if (neighbors[i].empty()) out.empty_points.push_back(i);
  return out;
}

MultiScaleDescriptors multiscale_fpfh(const PointCloud& cloud, double voxel_size,
                                      const std::vector<double>& multipliers,
                                      const FpfhOptions& options) {
  require(voxel_size > 0.0, "voxel_size must be positive");
  require(!multipliers.empty(), "at least one radius multiplier is required");
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    require(multipliers[i] > 0.0, "radius multipliers must be positive");
    if (i > 0)
      require(multipliers[i] < multipliers[i - 1], "radius multipliers must be strictly decreasing");
  }
  MultiScaleDescriptors out;
  for (std::size_t l = 0; l < multipliers.size(); ++l) {
    const double r = multipliers[l] * voxel_size;
    out.radii.push_back(r);
    out.levels.push_back(fpfh(cloud, r, options));
    out.levels.back().level = static_cast<int>(l + 1);
  }
  return out;
}

}  // namespace gcreg
