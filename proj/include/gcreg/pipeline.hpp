#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcreg/cloud.hpp"
#include "gcreg/metrics.hpp"
#include "gcreg/pose.hpp"
#include "gcreg/synth.hpp"

namespace gcreg {

inline constexpr int kSchemaVersion = 1;

/// Every tunable of a registration run. Serialized flat to JSON; the same keys
/// are accepted by config files, manifest settings and the CLI.
struct PipelineConfig {
  std::string preset = "indoor";
  double voxel_size = 0.025;
  std::vector<double> radii = {15.0, 10.0, 5.0};  // multiples of voxel_size
  double d_tol_mult = 2.0;                        // voting tolerance / voxel_size
  std::size_t samples = 5000;
  bool voting = true;
  bool single_scale = false;
  bool mutual = false;

  std::size_t normal_neighbors = 33;
  double smooth_radius_mult = 1.0;  // normal smoothing radius / voxel_size
  std::array<double, 3> normal_viewpoint = {0.0, 0.0, 0.0};
  std::size_t fpfh_bins = 11;

  std::size_t ransac_iters = 50000;
  double ransac_confidence = 0.999;
  double inlier_thresh = 0.0;  // absolute; 0 means 2 × voxel_size
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: all cores

  double ir_inlier_dist = 0.10;
  double fmr_min_ir = 0.05;
  std::string rr_mode = "rmse";
  double rr_rmse = 0.20;
  double rr_rre_deg = 5.0;
  double rr_rte = 2.0;
  std::size_t loss_samples = 256;

  bool json_errors = false;
  std::string output_json;
  std::string output_csv;
  std::string output_estimates;

  /// Cross-field checks, including "voting needs at least two levels".
  void validate() const;

  std::size_t levels() const { return single_scale ? 1 : radii.size(); }
  double ransac_threshold() const { return inlier_thresh > 0.0 ? inlier_thresh : 2.0 * voxel_size; }
  EvalThresholds thresholds() const;
  RecallMode recall_mode() const { return recall_mode_from_string(rr_mode); }
  RansacConfig ransac(unsigned inner_threads) const;
};

/// Applies the named preset's bundle of defaults on top of `config`.
void apply_preset(PipelineConfig& config, const std::string& preset);

nlohmann::json to_json(const PipelineConfig& config);
/// Overlays the keys present in `j`; unknown keys are rejected.
void merge_json(PipelineConfig& config, const nlohmann::json& j);

struct PairInput {
  const PointCloud& source;
  const PointCloud& target;
  std::optional<RigidTransform> gt;
  std::string pair_id;
};

/// downsample → normals → smoothing → multi-scale FPFH → sampling →
/// candidates → voting (→ mutual) → RANSAC → refine → metrics. Stage failures
/// are recorded in the report rather than thrown; config errors throw.
RegistrationReport run_pair(const PairInput& input, const PipelineConfig& config,
                            unsigned inner_threads = 1);

struct ManifestPair {
  std::string id;
  std::string source;  // resolved path
  std::string target;
  RigidTransform gt;
};

struct PairManifest {
  std::vector<ManifestPair> pairs;
  nlohmann::json settings = nlohmann::json::object();
};

/// Parses a manifest file. Relative cloud paths are resolved against the
/// manifest's directory. Throws Error(kValidation) for an empty pair list or a
/// malformed transform.
PairManifest load_manifest(const std::string& path);
nlohmann::json manifest_to_json(const PairManifest& manifest, const std::string& base_dir);

struct SuiteSummary {
  std::size_t pairs = 0;
  std::size_t completed = 0;  // pairs whose pipeline ran to the end
  double ir_mean = 0.0;
  double ir_median = 0.0;
  double ir_level1_mean = 0.0;
  double ir_level1_median = 0.0;
  double fmr = 0.0;
  double rr = 0.0;  // under the configured mode
  double rr_rmse_mode = 0.0;
  double rr_rre_rte_mode = 0.0;
  double rre_mean = 0.0;  // over successful pairs
  double rte_mean = 0.0;
  double rmse_mean = 0.0;
};

struct SuiteResult {
  std::vector<RegistrationReport> reports;  // manifest order
  SuiteSummary summary;
};

SuiteSummary summarize(const std::vector<RegistrationReport>& reports, const PipelineConfig& config);

/// Registers every manifest pair; pairs run concurrently up to
/// config.threads and are reported in manifest order.
SuiteResult run_suite(const PairManifest& manifest, const PipelineConfig& config);

nlohmann::json report_to_json(const RegistrationReport& report);
nlohmann::json summary_to_json(const SuiteSummary& summary);
nlohmann::json suite_to_json(const SuiteResult& result, const PipelineConfig& config);
/// One header row plus one row per pair; fixed column order, no timings.
std::string suite_to_csv(const SuiteResult& result);
const std::vector<std::string>& csv_columns();

/// Estimates file: one "<pair id> m00 m01 ... m33" line per pair.
std::string estimates_to_text(const std::vector<RegistrationReport>& reports);
std::vector<std::pair<std::string, RigidTransform>> parse_estimates(const std::string& text);

/// Scores externally estimated transforms against a manifest's ground truth.
SuiteResult evaluate_estimates(const PairManifest& manifest,
                               const std::vector<std::pair<std::string, RigidTransform>>& estimates,
                               const PipelineConfig& config);
std::string metrics_table(const SuiteResult& result, const PipelineConfig& config);

/// Writes `count` synthetic pairs (seeds config.seed + k) as binary PLY plus a
/// manifest.json into `out_dir`; returns the manifest path.
std::string write_synthetic_dataset(const SynthConfig& config, std::size_t count, double voxel_size,
                                    const std::string& out_dir);

/// Metric conventions embedded in every report header.
nlohmann::json conventions();

}  // namespace gcreg
