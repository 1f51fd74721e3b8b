#include "gcreg/pose.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "gcreg/parallel.hpp"
#include "gcreg/random.hpp"

namespace gcreg {

RigidTransform kabsch(std::span<const Vec3> src, std::span<const Vec3> dst,
                      std::span<const double> weights) {
  require(src.size() == dst.size(), "kabsch: point lists differ in length");
  require(weights.empty() || weights.size() == src.size(), "kabsch: weights length mismatch");
  if (src.size() < 3)
    throw Error(ErrorCode::kDegenerate,
                "kabsch needs at least 3 correspondences, got " + std::to_string(src.size()));

  double total = 0.0;
  Vec3 cs = Vec3::Zero();
  Vec3 cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    require(w >= 0.0 && std::isfinite(w), "kabsch: weights must be finite and non-negative");
    total += w;
    cs += w * src[i];
    cd += w * dst[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kDegenerate, "kabsch: all weights are zero");
  cs /= total;
  cd /= total;

  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    h += w * (src[i] - cs) * (dst[i] - cd).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  int rank = 0;
  for (int k = 0; k < 3; ++k)
    if (sv(k) > 1e-12 * sv(0)) ++rank;
  if (!(sv(0) > 0.0)) rank = 0;
  if (rank < 2)
    throw Error(ErrorCode::kDegenerate,
                "kabsch: cross-covariance has rank " + std::to_string(rank) + " (need >= 2)");

  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * d * u.transpose();
  return {r, cd - r * cs};
}

void RansacConfig::validate() const {
  require(sample_size >= 3, "ransac sample_size must be >= 3");
  require(confidence > 0.0 && confidence < 1.0, "ransac confidence must be in (0, 1)");
  require(inlier_threshold > 0.0 && std::isfinite(inlier_threshold),
          "ransac inlier_threshold must be positive");
  require(max_iterations >= 1, "ransac max_iterations must be >= 1");
}

std::vector<std::size_t> select_inliers(std::span<const Vec3> src, std::span<const Vec3> dst,
                                        const RigidTransform& transform, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < src.size(); ++i)
    if (residual(transform, src[i], dst[i]) <= threshold) out.push_back(i);
  return out;
}

double rmse_over(std::span<const Vec3> src, std::span<const Vec3> dst,
                 const RigidTransform& transform, std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i : subset) {
    const double r = residual(transform, src[i], dst[i]);
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(subset.size()));
}

namespace {

struct Hypothesis {
  bool valid = false;
  RigidTransform transform;
  std::size_t inliers = 0;
  double rmse = std::numeric_limits<double>::infinity();
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (!a.valid) return false;
  if (!b.valid) return true;
  return a.inliers > b.inliers || (a.inliers == b.inliers && a.rmse < b.rmse);
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

Hypothesis evaluate(std::span<const Vec3> src, std::span<const Vec3> dst,
                    const std::vector<std::size_t>& sample, double threshold) {
  Hypothesis h;
  if (triangle_area(src[sample[0]], src[sample[1]], src[sample[2]]) < 1e-12 ||
      triangle_area(dst[sample[0]], dst[sample[1]], dst[sample[2]]) < 1e-12)
    return h;
  std::vector<Vec3> s, d;
  for (std::size_t k : sample) {
    s.push_back(src[k]);
    d.push_back(dst[k]);
  }
  try {
    h.transform = kabsch(s, d);
  } catch (const Error&) {
    return h;
  }
  h.valid = true;
  double acc = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double r = residual(h.transform, src[i], dst[i]);
    if (r <= threshold) {
      ++h.inliers;
      acc += r * r;
    }
  }
  h.rmse = h.inliers ? std::sqrt(acc / static_cast<double>(h.inliers)) : 0.0;
  return h;
}

std::size_t required_iterations(std::size_t inliers, std::size_t n, std::size_t s,
                                double confidence) {
  const double w = static_cast<double>(inliers) / static_cast<double>(n);
  const double ws = std::pow(w, static_cast<double>(s));
  if (ws <= 0.0) return std::numeric_limits<std::size_t>::max();
  if (ws >= 1.0) return 1;
  const double k = std::log(1.0 - confidence) / std::log1p(-ws);
  if (!(k < 1e18)) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(std::ceil(k));
}

}  // namespace

PoseResult ransac(std::span<const Vec3> src, std::span<const Vec3> dst, const RansacConfig& config) {
  config.validate();
  require(src.size() == dst.size(), "ransac: point lists differ in length");
  const std::size_t n = src.size();
  if (n < config.sample_size)
    throw Error(ErrorCode::kDegenerate, "ransac needs at least " +
                                            std::to_string(config.sample_size) +
                                            " correspondences, got " + std::to_string(n));

  Rng rng(config.seed);
  constexpr std::size_t kBlock = 256;
  Hypothesis best;
  std::size_t iterations = 0;
  bool stop = false;
  std::vector<std::vector<std::size_t>> samples;
  std::vector<Hypothesis> results;

  while (!stop && iterations < config.max_iterations) {
    // Samples are drawn sequentially so the stream does not depend on threads.
    const std::size_t block = std::min(kBlock, config.max_iterations - iterations);
    samples.assign(block, {});
    for (auto& sample : samples) {
      while (sample.size() < config.sample_size) {
        const std::size_t k = static_cast<std::size_t>(rng.index(n));
        if (std::find(sample.begin(), sample.end(), k) == sample.end()) sample.push_back(k);
      }
    }
    results.assign(block, {});
    parallel_for(block, config.threads, [&](std::size_t b) {
      results[b] = evaluate(src, dst, samples[b], config.inlier_threshold);
    });
    for (std::size_t b = 0; b < block; ++b) {
      ++iterations;
      if (better(results[b], best)) best = results[b];
      if (best.valid && iterations >= required_iterations(best.inliers, n, config.sample_size,
                                                          config.confidence)) {
        stop = true;
        break;
      }
    }
  }

  PoseResult out;
  out.iterations_run = iterations;
  if (!best.valid || best.inliers == 0) {
    if (best.valid) out.transform = best.transform;
    throw NoConsensusError("ransac found no consensus after " + std::to_string(iterations) +
                               " iterations",
                           out);
  }

  out.transform = best.transform;
  out.inlier_indices = select_inliers(src, dst, best.transform, config.inlier_threshold);
  if (out.inlier_indices.size() >= 3) {
    std::vector<Vec3> s, d;
    for (std::size_t i : out.inlier_indices) {
      s.push_back(src[i]);
      d.push_back(dst[i]);
    }
    try {
      const RigidTransform refit = kabsch(s, d);
      auto refit_inliers = select_inliers(src, dst, refit, config.inlier_threshold);
      if (refit_inliers.size() >= out.inlier_indices.size()) {
        out.transform = refit;
        out.inlier_indices = std::move(refit_inliers);
      }
    } catch (const Error&) {
      // keep the minimal-sample hypothesis
    }
  }
  out.inlier_rmse = rmse_over(src, dst, out.transform, out.inlier_indices);
  return out;
}

PoseResult refine(std::span<const Vec3> src, std::span<const Vec3> dst,
                  const RigidTransform& transform, double inlier_threshold) {
  require(src.size() == dst.size(), "refine: point lists differ in length");
  require(inlier_threshold > 0.0, "refine: threshold must be positive");
  require(transform.is_proper(), "refine: input transform is not a proper rigid motion");
  PoseResult out;
  out.transform = transform;
  out.inlier_indices = select_inliers(src, dst, transform, inlier_threshold);
  out.inlier_rmse = rmse_over(src, dst, transform, out.inlier_indices);
  if (out.inlier_indices.size() < 3) {
    out.refit_skipped = true;
    return out;
  }
  std::vector<Vec3> s, d;
  for (std::size_t i : out.inlier_indices) {
    s.push_back(src[i]);
    d.push_back(dst[i]);
  }
  RigidTransform refit;
  try {
    refit = kabsch(s, d);
  } catch (const Error&) {
    out.refit_skipped = true;
    return out;
  }
  out.transform = refit;
  out.inlier_indices = select_inliers(src, dst, refit, inlier_threshold);
  out.inlier_rmse = rmse_over(src, dst, refit, out.inlier_indices);
  return out;
}

}  // namespace gcreg
