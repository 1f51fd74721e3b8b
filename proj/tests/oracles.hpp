#pragma once

// Straightforward re-implementations used as references by the tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gcreg/cloud.hpp"
#include "gcreg/matching.hpp"

namespace oracles {

using gcreg::Vec3;
using gcreg::PointCloud;
constexpr double kPi = std::numbers::pi;


// Textbook pair feature: the origin is the point whose normal makes the
// smaller angle with the connecting line.
inline void pair_features(Vec3 p1, Vec3 n1, Vec3 p2, Vec3 n2, double& f1, double& f2, double& f3) {
  Vec3 dp = p2 - p1;
  const double len = dp.norm();
  double a1 = n1.dot(dp) / len, a2 = n2.dot(dp) / len;
  if (std::acos(std::abs(a1)) > std::acos(std::abs(a2))) {
    std::swap(n1, n2);
    dp = -dp;
    f3 = -a2;
  } else {
    f3 = a1;
  }
  Vec3 v = dp.cross(n1);
  if (v.norm() == 0.0) {
    f1 = f2 = 0.0;
    return;
  }
  v.normalize();
  const Vec3 w = n1.cross(v);
  f2 = v.dot(n2);
  f1 = std::atan2(w.dot(n2), n1.dot(n2));
}

inline int clamp_bin(double x, int bins) { return std::max(0, std::min(bins - 1, static_cast<int>(std::floor(x)))); }

inline std::vector<double> fpfh(const PointCloud& c, double r, int bins) {
  const std::size_t n = c.size(), dim = 3 * bins;
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (c.points[j] - c.points[i]).norm();
      if (j != i && d < r && d > 0) nb[i].push_back(j);
    }
  std::vector<double> spfh(n * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : nb[i]) {
      double f1, f2, f3;
      pair_features(c.points[i], c.normals[i], c.points[j], c.normals[j], f1, f2, f3);
      const double inc = 100.0 / nb[i].size();
      spfh[i * dim + clamp_bin(bins * (f1 + kPi) / (2 * kPi), bins)] += inc;
      spfh[i * dim + bins + clamp_bin(bins * (f2 + 1) / 2, bins)] += inc;
      spfh[i * dim + 2 * bins + clamp_bin(bins * (f3 + 1) / 2, bins)] += inc;
    }
  std::vector<double> out(n * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (nb[i].empty()) continue;
    for (std::size_t b = 0; b < dim; ++b) {
      double acc = 0.0;
      for (std::size_t j : nb[i]) acc += spfh[j * dim + b] / (c.points[j] - c.points[i]).norm();
      out[i * dim + b] = spfh[i * dim + b] + acc / nb[i].size();
    }
    for (int s = 0; s < 3; ++s) {
      double sum = 0.0;
      for (int b = 0; b < bins; ++b) sum += out[i * dim + s * bins + b];
      for (int b = 0; b < bins; ++b) out[i * dim + s * bins + b] *= 100.0 / sum;
    }
  }
  return out;
}


struct VoteResult {
  std::vector<gcreg::Correspondence> pairs;
  std::vector<std::size_t> rejected;
};

/// Walks (1,2), (2,3), ... and takes the lower level of the first pair whose
/// points coincide or lie within d_tol.
inline VoteResult vote(const std::vector<std::vector<std::size_t>>& cand, const std::vector<Vec3>& pts,
                       double d_tol) {
  VoteResult out;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    int found = -1;
    for (std::size_t l = 1; l < cand[i].size() && found < 0; ++l) {
      const std::size_t a = cand[i][l - 1], b = cand[i][l];
      const double dx = pts[a].x() - pts[b].x(), dy = pts[a].y() - pts[b].y(), dz = pts[a].z() - pts[b].z();
      if (a == b || std::sqrt(dx * dx + dy * dy + dz * dz) <= d_tol) found = static_cast<int>(l - 1);
    }
    if (found >= 0)
      out.pairs.push_back({i, cand[i][found], found + 1});
    else
      out.rejected.push_back(i);
  }
  return out;
}

/// Term-by-term circle loss: every anchor's positive and the positives of all
/// other anchors as negatives, with plain exp and log.
inline double circle_loss(const std::vector<std::vector<double>>& fx, const std::vector<std::vector<double>>& fy,
                          const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double gamma,
                          double dp_margin, double dn_margin) {
  const auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double d = dist(fx[pairs[i].first], fy[pairs[i].second]);
    const double pos = std::exp(gamma * std::max(d - dp_margin, 0.0) * (d - dp_margin));
    double neg = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].first == pairs[i].first) continue;
      const double dn = dist(fx[pairs[i].first], fy[pairs[k].second]);
      neg += std::exp(gamma * std::max(dn_margin - dn, 0.0) * (dn_margin - dn));
    }
    total += std::log(1.0 + pos * neg);
  }
  return total / static_cast<double>(pairs.size());
}

/// Rotation angle between two rotations via unit quaternions, in degrees.
inline double quaternion_angle_deg(const gcreg::Mat3& a, const gcreg::Mat3& b) {
  const Eigen::Quaterniond q = Eigen::Quaterniond(a).conjugate() * Eigen::Quaterniond(b);
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w())) * 180.0 / kPi;
}

}  // namespace oracles
