#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcreg/cloud.hpp"

namespace gcreg {

struct EvalThresholds {
  double inlier_dist = 0.10;  // IR inlier radius
  double fmr_min_ir = 0.05;   // FMR: a pair counts when IR exceeds this
  double rr_rmse = 0.20;      // RR, rmse mode
  double rr_rre_deg = 5.0;    // RR, rre_rte mode
  double rr_rte = 2.0;

  void validate() const;
};

enum class RecallMode { kRmse, kRreRte };

const char* to_string(RecallMode mode);
RecallMode recall_mode_from_string(const std::string& s);

struct StageTimings {
  double descriptors_ms = 0.0;
  double matching_ms = 0.0;
  double voting_ms = 0.0;
  double ransac_ms = 0.0;
};

/// Outcome of registering one pair. Metric fields are NaN when they could not
/// be computed (no ground truth, failed stage, empty overlap).
struct RegistrationReport {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::string pair_id;
  bool ok = false;
  std::string failure_stage;  // empty when ok
  std::string error;
  int failure_code = 0;  // ErrorCode value when !ok

  RigidTransform transform;
  bool has_ground_truth = false;

  std::size_t source_points = 0;  // after downsampling
  std::size_t target_points = 0;
  std::size_t proposed = 0;   // queried source points
  std::size_t accepted = 0;   // correspondences handed to RANSAC
  std::size_t inliers = 0;    // ground-truth inliers among accepted
  std::size_t ransac_inliers = 0;
  std::size_t ransac_iterations = 0;

  double ir = kNaN;         // inlier ratio of the accepted set
  double ir_level1 = kNaN;  // inlier ratio of raw level-1 matches
  double rre = kNaN;        // degrees
  double rte = kNaN;
  double rmse = kNaN;
  bool success_rmse = false;
  bool success_rre_rte = false;

  StageTimings timings;
};

/// Fraction of pairs with ‖gt(x) − y‖ < inlier_dist. An empty list gives 0
/// and sets *empty when provided.
double inlier_ratio(std::span<const Vec3> src, std::span<const Vec3> dst, const RigidTransform& gt,
                    double inlier_dist, bool* empty = nullptr);

/// Geodesic angle between the two rotations, in degrees, within [0, 180].
double rre(const RigidTransform& est, const RigidTransform& gt);
double rte(const RigidTransform& est, const RigidTransform& gt);

/// RMS of ‖est(x_i) − y_j‖ over ground-truth index pairs (i into src, j into
/// dst). Throws Error(kUndefinedMetric) when `pairs` is empty.
double registration_rmse(const PointCloud& src, const PointCloud& dst, const RigidTransform& est,
                         std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// Whether one report passes the success test of `mode`.
bool registration_success(const RegistrationReport& report, const EvalThresholds& thresholds,
                          RecallMode mode);
double registration_recall(std::span<const RegistrationReport> reports,
                           const EvalThresholds& thresholds, RecallMode mode);
double feature_matching_recall(std::span<const double> per_pair_irs, double fmr_min_ir);

}  // namespace gcreg
