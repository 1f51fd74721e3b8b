#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcreg/cloud.hpp"
#include "gcreg/error.hpp"

namespace gcreg {

/// Weighted least-squares rigid transform mapping src onto dst.
///
/// Throws Error(kDegenerate) for fewer than 3 pairs, all-zero weights, or a
/// cross-covariance of rank below 2 (collinear or coincident points).
RigidTransform kabsch(std::span<const Vec3> src, std::span<const Vec3> dst,
                      std::span<const double> weights = {});

/// ‖T(x) − y‖, the residual every inlier test in this module uses.
inline double residual(const RigidTransform& t, const Vec3& x, const Vec3& y) {
  return (t.apply(x) - y).norm();
}

struct RansacConfig {
  std::size_t max_iterations = 50000;
  double inlier_threshold = 0.05;
  std::size_t sample_size = 3;
  double confidence = 0.999;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct PoseResult {
  RigidTransform transform;
  /// Indices into the correspondence list with residual <= threshold.
  std::vector<std::size_t> inlier_indices;
  std::size_t iterations_run = 0;
  double inlier_rmse = 0.0;
  /// Set by refine when it could not refit and returned its input.
  bool refit_skipped = false;
};

class NoConsensusError : public Error {
 public:
  NoConsensusError(const std::string& what, PoseResult best)
      : Error(ErrorCode::kNoConsensus, what), best_(std::move(best)) {}
  const PoseResult& best() const noexcept { return best_; }

 private:
  PoseResult best_;
};

/// Minimal-sample RANSAC scored by inlier count (ties to lower inlier RMSE),
/// refit on the best consensus set. Deterministic for a fixed seed and
/// independent of the thread count.
PoseResult ransac(std::span<const Vec3> src, std::span<const Vec3> dst, const RansacConfig& config);

/// One re-selection plus refit pass under `transform`.
PoseResult refine(std::span<const Vec3> src, std::span<const Vec3> dst,
                  const RigidTransform& transform, double inlier_threshold);

/// Inliers of `transform` and their RMSE (0 when there are none).
std::vector<std::size_t> select_inliers(std::span<const Vec3> src, std::span<const Vec3> dst,
                                        const RigidTransform& transform, double threshold);
double rmse_over(std::span<const Vec3> src, std::span<const Vec3> dst,
                 const RigidTransform& transform, std::span<const std::size_t> subset);

}  // namespace gcreg
