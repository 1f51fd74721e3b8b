#include "gcreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gcreg/error.hpp"

namespace gcreg {

void EvalThresholds::validate() const {
  require(inlier_dist > 0.0 && fmr_min_ir > 0.0 && rr_rmse > 0.0 && rr_rre_deg > 0.0 &&
              rr_rte > 0.0,
          "evaluation thresholds must be strictly positive");
}

const char* to_string(RecallMode mode) {
  return mode == RecallMode::kRmse ? "rmse" : "rre_rte";
}

RecallMode recall_mode_from_string(const std::string& s) {
  if (s == "rmse") return RecallMode::kRmse;
  if (s == "rre_rte") return RecallMode::kRreRte;
  throw Error(ErrorCode::kParameter, "unknown recall mode '" + s + "' (rmse | rre_rte)");
}

double inlier_ratio(std::span<const Vec3> src, std::span<const Vec3> dst, const RigidTransform& gt,
                    double inlier_dist, bool* empty) {
  require(src.size() == dst.size(), "inlier_ratio: point lists differ in length");
  if (empty) *empty = src.empty();
  if (src.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < src.size(); ++i)
    if ((gt.apply(src[i]) - dst[i]).norm() < inlier_dist) ++hits;
  return static_cast<double>(hits) / static_cast<double>(src.size());
}

double rre(const RigidTransform& est, const RigidTransform& gt) {
  // θ with cos θ = (tr(R) − 1)/2 and sin θ = ‖vee(R − Rᵀ)‖/2 for R = R_gtᵀ R_est;
  // atan2 keeps full precision near 0° and 180°.
  const Mat3 r = gt.rotation().transpose() * est.rotation();
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = std::min(1.0, axis.norm() / 2.0);
  return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

double rte(const RigidTransform& est, const RigidTransform& gt) {
  return (est.translation() - gt.translation()).norm();
}

double registration_rmse(const PointCloud& src, const PointCloud& dst, const RigidTransform& est,
                         std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  if (pairs.empty())
    throw Error(ErrorCode::kUndefinedMetric, "registration_rmse: no ground-truth correspondences");
  double acc = 0.0;
  for (const auto& [i, j] : pairs) {
    require(i < src.size() && j < dst.size(), "registration_rmse: index out of range");
    acc += (est.apply(src.points[i]) - dst.points[j]).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

bool registration_success(const RegistrationReport& report, const EvalThresholds& thresholds,
                          RecallMode mode) {
  if (!report.ok) return false;
  if (mode == RecallMode::kRmse) return report.rmse < thresholds.rr_rmse;
  return report.rre < thresholds.rr_rre_deg && report.rte < thresholds.rr_rte;
}

double registration_recall(std::span<const RegistrationReport> reports,
                           const EvalThresholds& thresholds, RecallMode mode) {
  require(!reports.empty(), "registration_recall: empty report list");
  std::size_t hits = 0;
  for (const auto& r : reports)
    if (registration_success(r, thresholds, mode)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(reports.size());
}

double feature_matching_recall(std::span<const double> per_pair_irs, double fmr_min_ir) {
  require(!per_pair_irs.empty(), "feature_matching_recall: empty IR list");
  std::size_t hits = 0;
  for (double ir : per_pair_irs)
    if (ir > fmr_min_ir) ++hits;
  return static_cast<double>(hits) / static_cast<double>(per_pair_irs.size());
}

}  // namespace gcreg
