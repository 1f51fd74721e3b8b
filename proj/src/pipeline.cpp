#include "gcreg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "gcreg/descriptors.hpp"
#include "gcreg/error.hpp"
#include "gcreg/io.hpp"
#include "gcreg/matching.hpp"
#include "gcreg/parallel.hpp"

namespace gcreg {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::validate() const {
  require(voxel_size > 0.0 && std::isfinite(voxel_size), "voxel_size must be positive");
  require(!radii.empty(), "radii must list at least one multiplier");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] > 0.0, "radius multipliers must be positive");
    if (i) require(radii[i] < radii[i - 1], "radius multipliers must be strictly decreasing");
  }
  require(!voting || single_scale || radii.size() >= 2,
          "consistent voting needs at least two descriptor levels (use --no-voting or more radii)");
  require(d_tol_mult >= 0.0, "d_tol_mult must be >= 0");
  require(samples >= 1, "samples must be >= 1");
  require(normal_neighbors >= 3, "normal_neighbors must be >= 3");
  require(smooth_radius_mult > 0.0, "smooth_radius_mult must be positive");
  require(fpfh_bins >= 2 && fpfh_bins <= 255, "fpfh_bins must be in [2, 255]");
  require(inlier_thresh >= 0.0, "inlier_thresh must be >= 0 (0 selects 2 x voxel)");
  require(loss_samples >= 2, "loss_samples must be >= 2");
  ransac(1).validate();
  thresholds().validate();
  (void)recall_mode();
}

EvalThresholds PipelineConfig::thresholds() const {
  return {ir_inlier_dist, fmr_min_ir, rr_rmse, rr_rre_deg, rr_rte};
}

RansacConfig PipelineConfig::ransac(unsigned inner_threads) const {
  RansacConfig r;
  r.max_iterations = ransac_iters;
  r.inlier_threshold = ransac_threshold();
  r.confidence = ransac_confidence;
  r.seed = seed;
  r.threads = inner_threads;
  return r;
}

void apply_preset(PipelineConfig& c, const std::string& preset) {
  if (preset == "indoor") {
    c.voxel_size = 0.025;
    c.normal_neighbors = 33;
    c.ir_inlier_dist = 0.10;
    c.rr_mode = "rmse";
    c.rr_rmse = 0.20;
    c.loss_samples = 256;
  } else if (preset == "outdoor") {
    c.voxel_size = 0.3;
    c.normal_neighbors = 33;
    c.ir_inlier_dist = 0.6;
    c.rr_mode = "rre_rte";
    c.rr_rre_deg = 5.0;
    c.rr_rte = 2.0;
    c.loss_samples = 512;
  } else if (preset == "object") {
    c.voxel_size = 0.02;
    c.normal_neighbors = 33;
    c.ir_inlier_dist = 0.04;
    c.rr_mode = "rre_rte";
    c.rr_rre_deg = 5.0;
    c.rr_rte = 0.05;
    c.loss_samples = 768;
  } else if (preset == "synthetic") {
    c.voxel_size = 0.025;
    c.normal_neighbors = 60;
    c.ir_inlier_dist = 0.05;
    c.rr_mode = "rre_rte";
    c.rr_rre_deg = 5.0;
    c.rr_rte = 0.05;
    c.loss_samples = 256;
  } else {
    throw Error(ErrorCode::kParameter,
                "unknown preset '" + preset + "' (indoor | outdoor | object | synthetic)");
  }
  c.preset = preset;
}

json to_json(const PipelineConfig& c) {
  return json{
      {"preset", c.preset},
      {"voxel_size", c.voxel_size},
      {"radii", c.radii},
      {"d_tol_mult", c.d_tol_mult},
      {"samples", c.samples},
      {"voting", c.voting},
      {"single_scale", c.single_scale},
      {"mutual", c.mutual},
      {"normal_neighbors", c.normal_neighbors},
      {"smooth_radius_mult", c.smooth_radius_mult},
      {"normal_viewpoint", c.normal_viewpoint},
      {"fpfh_bins", c.fpfh_bins},
      {"ransac_iters", c.ransac_iters},
      {"ransac_confidence", c.ransac_confidence},
      {"inlier_thresh", c.inlier_thresh},
      {"seed", c.seed},
      {"threads", c.threads},
      {"ir_inlier_dist", c.ir_inlier_dist},
      {"fmr_min_ir", c.fmr_min_ir},
      {"rr_mode", c.rr_mode},
      {"rr_rmse", c.rr_rmse},
      {"rr_rre_deg", c.rr_rre_deg},
      {"rr_rte", c.rr_rte},
      {"loss_samples", c.loss_samples},
      {"json_errors", c.json_errors},
      {"output_json", c.output_json},
      {"output_csv", c.output_csv},
      {"output_estimates", c.output_estimates},
  };
}

void merge_json(PipelineConfig& c, const json& j) {
  require(j.is_object(), "configuration must be a JSON object");
  try {
    // The preset bundle goes first so explicit keys in the same object win.
    if (j.contains("preset")) apply_preset(c, j.at("preset").get<std::string>());
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") continue;
      else if (key == "voxel_size") c.voxel_size = v.get<double>();
      else if (key == "radii") c.radii = v.get<std::vector<double>>();
      else if (key == "d_tol_mult") c.d_tol_mult = v.get<double>();
      else if (key == "samples") c.samples = v.get<std::size_t>();
      else if (key == "voting") c.voting = v.get<bool>();
      else if (key == "single_scale") c.single_scale = v.get<bool>();
      else if (key == "mutual") c.mutual = v.get<bool>();
      else if (key == "normal_neighbors") c.normal_neighbors = v.get<std::size_t>();
      else if (key == "smooth_radius_mult") c.smooth_radius_mult = v.get<double>();
      else if (key == "normal_viewpoint") c.normal_viewpoint = v.get<std::array<double, 3>>();
      else if (key == "fpfh_bins") c.fpfh_bins = v.get<std::size_t>();
      else if (key == "ransac_iters") c.ransac_iters = v.get<std::size_t>();
      else if (key == "ransac_confidence") c.ransac_confidence = v.get<double>();
      else if (key == "inlier_thresh") c.inlier_thresh = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "threads") c.threads = v.get<unsigned>();
      else if (key == "ir_inlier_dist") c.ir_inlier_dist = v.get<double>();
      else if (key == "fmr_min_ir") c.fmr_min_ir = v.get<double>();
      else if (key == "rr_mode") c.rr_mode = v.get<std::string>();
      else if (key == "rr_rmse") c.rr_rmse = v.get<double>();
      else if (key == "rr_rre_deg") c.rr_rre_deg = v.get<double>();
      else if (key == "rr_rte") c.rr_rte = v.get<double>();
      else if (key == "loss_samples") c.loss_samples = v.get<std::size_t>();
      else if (key == "json_errors") c.json_errors = v.get<bool>();
      else if (key == "output_json") c.output_json = v.get<std::string>();
      else if (key == "output_csv") c.output_csv = v.get<std::string>();
      else if (key == "output_estimates") c.output_estimates = v.get<std::string>();
      else throw Error(ErrorCode::kParameter, "unknown configuration key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParameter, std::string("bad configuration value: ") + e.what());
  }
}

json conventions() {
  return json{
      {"ir", "fraction of correspondences with ||gt(x) - y|| < ir_inlier_dist"},
      {"ir_level1", "same, over the raw level-1 nearest-neighbour matches of every sampled point"},
      {"rre", "geodesic angle of R_est^T R_gt in degrees, within [0, 180]"},
      {"rte", "||t_est - t_gt||"},
      {"rmse", "RMS of ||est(x) - y|| over gt_correspondences"},
      {"fmr", "fraction of pairs with IR > fmr_min_ir"},
      {"rr_rmse", "pair succeeds when RMSE over ground-truth correspondences < rr_rmse"},
      {"rr_rre_rte", "pair succeeds when RRE < rr_rre_deg and RTE < rr_rte"},
      {"gt_correspondences",
       "downsampled source points whose ground-truth image has a downsampled target point "
       "closer than ir_inlier_dist"},
      {"rre_rte_aggregation", "means over pairs that succeed under the configured rr_mode"},
  };
}

// ---------------------------------------------------------------------------
// Single pair

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<std::pair<std::size_t, std::size_t>> ground_truth_pairs(const PointCloud& src,
                                                                     const PointCloud& dst,
                                                                     const RigidTransform& gt,
                                                                     double max_dist) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const SpatialIndex index(dst);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto hit = index.nearest(gt.apply(src.points[i]));
    if (hit.distance < max_dist) out.emplace_back(i, hit.index);
  }
  return out;
}

constexpr std::uint64_t kTargetSeedSalt = 0x9E3779B97F4A7C15ULL;

}  // namespace

RegistrationReport run_pair(const PairInput& in, const PipelineConfig& cfg, unsigned threads) {
  cfg.validate();
  RegistrationReport rep;
  rep.pair_id = in.pair_id;
  rep.has_ground_truth = in.gt.has_value();
  const double voxel = cfg.voxel_size;
  const EvalThresholds th = cfg.thresholds();
  std::string stage = "downsample";

  PointCloud xs, ys;
  try {
    require(!in.source.empty() && !in.target.empty(), "empty input cloud");
    xs = voxel_downsample(in.source, voxel);
    ys = voxel_downsample(in.target, voxel);
    rep.source_points = xs.size();
    rep.target_points = ys.size();

    auto t0 = Clock::now();
    stage = "normals";
    NormalOptions no;
    no.neighbors = cfg.normal_neighbors;
    no.viewpoint = Vec3(cfg.normal_viewpoint[0], cfg.normal_viewpoint[1], cfg.normal_viewpoint[2]);
    no.threads = threads;
    PointCloud raw_x{in.source.points, {}};
    PointCloud raw_y{in.target.points, {}};
    const PointCloud nx = estimate_normals(raw_x, no);
    const PointCloud ny = estimate_normals(raw_y, no);
    xs = smooth_normals(xs, nx, cfg.smooth_radius_mult * voxel, threads);
    ys = smooth_normals(ys, ny, cfg.smooth_radius_mult * voxel, threads);

    stage = "descriptors";
    std::vector<double> multipliers = cfg.radii;
    if (cfg.single_scale) multipliers.resize(1);
    const FpfhOptions fo{cfg.fpfh_bins, threads};
    const MultiScaleDescriptors fx = multiscale_fpfh(xs, voxel, multipliers, fo);
    const MultiScaleDescriptors fy = multiscale_fpfh(ys, voxel, multipliers, fo);
    rep.timings.descriptors_ms = elapsed_ms(t0);

    t0 = Clock::now();
    stage = "matching";
    const auto sx = sample_points(xs.size(), cfg.samples, cfg.seed);
    const auto sy = sample_points(ys.size(), cfg.samples, cfg.seed ^ kTargetSeedSalt);
    const MultiScaleDescriptors fxs = select_rows(fx, sx);
    const MultiScaleDescriptors fys = select_rows(fy, sy);
    std::vector<Vec3> xsp, ysp;
    for (std::size_t i : sx) xsp.push_back(xs.points[i]);
    for (std::size_t j : sy) ysp.push_back(ys.points[j]);
    const CandidateTable table = build_candidates(fxs, fys, threads);
    std::optional<CandidateTable> backward;
    if (cfg.mutual) backward = build_candidates(fys, fxs, threads);
    rep.timings.matching_ms = elapsed_ms(t0);

    t0 = Clock::now();
    stage = "voting";
    const bool vote = cfg.voting && !cfg.single_scale;
    const double d_tol = cfg.d_tol_mult * voxel;
    CorrespondenceSet corr = vote ? consistent_vote(table, ysp, d_tol) : single_level_correspondences(table);
    if (backward) {
      const CorrespondenceSet back =
          vote ? consistent_vote(*backward, xsp, d_tol) : single_level_correspondences(*backward);
      corr = mutual_filter(corr, back);
    }
    rep.timings.voting_ms = elapsed_ms(t0);

    rep.proposed = sx.size();
    rep.accepted = corr.pairs.size();
    std::vector<Vec3> src, dst;
    for (const auto& c : corr.pairs) {
      src.push_back(xsp[c.source]);
      dst.push_back(ysp[c.target]);
    }
    if (in.gt) {
      rep.ir = inlier_ratio(src, dst, *in.gt, th.inlier_dist);
      rep.inliers = static_cast<std::size_t>(std::llround(rep.ir * static_cast<double>(src.size())));
      std::vector<Vec3> l1;
      for (std::size_t i = 0; i < table.sources(); ++i) l1.push_back(ysp[table.target(i, 0)]);
      rep.ir_level1 = inlier_ratio(xsp, l1, *in.gt, th.inlier_dist);
    }

    t0 = Clock::now();
    stage = "ransac";
    const RansacConfig rc = cfg.ransac(threads);
    const PoseResult coarse = ransac(src, dst, rc);
    const PoseResult fine = refine(src, dst, coarse.transform, rc.inlier_threshold);
    rep.timings.ransac_ms = elapsed_ms(t0);
    rep.transform = fine.transform;
    rep.ransac_inliers = fine.inlier_indices.size();
    rep.ransac_iterations = coarse.iterations_run;

    stage = "metrics";
    if (in.gt) {
      rep.rre = rre(rep.transform, *in.gt);
      rep.rte = rte(rep.transform, *in.gt);
      const auto gt_pairs = ground_truth_pairs(xs, ys, *in.gt, th.inlier_dist);
      if (!gt_pairs.empty()) rep.rmse = registration_rmse(xs, ys, rep.transform, gt_pairs);
    }
    rep.ok = true;
  } catch (const Error& e) {
    rep.ok = false;
    rep.failure_stage = stage;
    rep.error = e.what();
    rep.failure_code = static_cast<int>(e.code());
  }
  rep.success_rmse = registration_success(rep, th, RecallMode::kRmse);
  rep.success_rre_rte = registration_success(rep, th, RecallMode::kRreRte);
  return rep;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

RigidTransform transform_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 16)
    throw Error(ErrorCode::kValidation, what + ": transform must be an array of 16 numbers");
  std::array<double, 16> m{};
  for (std::size_t k = 0; k < 16; ++k) {
    if (!j[k].is_number()) throw Error(ErrorCode::kValidation, what + ": non-numeric transform entry");
    m[k] = j[k].get<double>();
  }
  try {
    return RigidTransform::from_row_major(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::kValidation, what + ": " + e.what());
  }
}

json transform_to_json(const RigidTransform& t) {
  const auto m = t.row_major();
  return json(std::vector<double>(m.begin(), m.end()));
}

}  // namespace

PairManifest load_manifest(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, "manifest '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array())
    throw Error(ErrorCode::kValidation, "manifest '" + path + "' lacks a 'pairs' array");
  if (j["pairs"].empty()) throw Error(ErrorCode::kValidation, "manifest '" + path + "' has no pairs");
  const fs::path base = fs::path(path).parent_path();
  PairManifest m;
  if (j.contains("settings")) {
    if (!j["settings"].is_object())
      throw Error(ErrorCode::kValidation, "manifest settings must be an object");
    m.settings = j["settings"];
  }
  std::size_t k = 0;
  for (const auto& p : j["pairs"]) {
    const std::string what = "manifest pair " + std::to_string(k);
    if (!p.is_object() || !p.contains("source") || !p.contains("target") || !p.contains("gt") ||
        !p["source"].is_string() || !p["target"].is_string())
      throw Error(ErrorCode::kValidation, what + ": needs string 'source', 'target' and a 'gt'");
    ManifestPair mp;
    mp.id = p.contains("id") && p["id"].is_string() ? p["id"].get<std::string>()
                                                     : "pair_" + std::to_string(k);
    const auto resolve = [&](const std::string& s) {
      const fs::path q(s);
      return (q.is_absolute() ? q : base / q).lexically_normal().string();
    };
    mp.source = resolve(p["source"].get<std::string>());
    mp.target = resolve(p["target"].get<std::string>());
    mp.gt = transform_from_json(p["gt"], what);
    m.pairs.push_back(std::move(mp));
    ++k;
  }
  return m;
}

json manifest_to_json(const PairManifest& m, const std::string& base_dir) {
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    const auto rel = [&](const std::string& s) {
      return base_dir.empty() ? s : fs::path(s).lexically_relative(base_dir).string();
    };
    pairs.push_back({{"id", p.id}, {"source", rel(p.source)}, {"target", rel(p.target)},
                     {"gt", transform_to_json(p.gt)}});
  }
  return json{{"schema_version", kSchemaVersion}, {"settings", m.settings}, {"pairs", pairs}};
}

// ---------------------------------------------------------------------------
// Suite

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SuiteSummary summarize(const std::vector<RegistrationReport>& reports, const PipelineConfig& cfg) {
  const EvalThresholds th = cfg.thresholds();
  const RecallMode mode = cfg.recall_mode();
  SuiteSummary s;
  s.pairs = reports.size();
  std::vector<double> irs, irs1, rres, rtes, rmses;
  for (const auto& r : reports) {
    if (r.ok) ++s.completed;
    if (std::isfinite(r.ir)) irs.push_back(r.ir);
    if (std::isfinite(r.ir_level1)) irs1.push_back(r.ir_level1);
    if (registration_success(r, th, mode)) {
      rres.push_back(r.rre);
      rtes.push_back(r.rte);
      if (std::isfinite(r.rmse)) rmses.push_back(r.rmse);
    }
  }
  s.ir_mean = mean_of(irs);
  s.ir_median = median_of(irs);
  s.ir_level1_mean = mean_of(irs1);
  s.ir_level1_median = median_of(irs1);
  s.fmr = irs.empty() ? std::numeric_limits<double>::quiet_NaN()
                      : feature_matching_recall(irs, th.fmr_min_ir);
  if (!reports.empty()) {
    s.rr_rmse_mode = registration_recall(reports, th, RecallMode::kRmse);
    s.rr_rre_rte_mode = registration_recall(reports, th, RecallMode::kRreRte);
    s.rr = mode == RecallMode::kRmse ? s.rr_rmse_mode : s.rr_rre_rte_mode;
  }
  s.rre_mean = mean_of(rres);
  s.rte_mean = mean_of(rtes);
  s.rmse_mean = mean_of(rmses);
  return s;
}

SuiteResult run_suite(const PairManifest& manifest, const PipelineConfig& cfg) {
  cfg.validate();
  require(!manifest.pairs.empty(), "manifest has no pairs", ErrorCode::kValidation);
  SuiteResult out;
  out.reports.resize(manifest.pairs.size());
  const unsigned threads = resolve_threads(cfg.threads);
  const bool across_pairs = threads > 1 && manifest.pairs.size() > 1;
  const unsigned inner = across_pairs ? 1u : threads;

  parallel_for(manifest.pairs.size(), across_pairs ? threads : 1u, [&](std::size_t k) {
    const ManifestPair& p = manifest.pairs[k];
    RegistrationReport& rep = out.reports[k];
    PointCloud x, y;
    try {
      x = read_cloud(p.source);
      y = read_cloud(p.target);
    } catch (const Error& e) {
      rep.pair_id = p.id;
      rep.has_ground_truth = true;
      rep.failure_stage = "load";
      rep.error = e.what();
      rep.failure_code = static_cast<int>(e.code());
      return;
    }
    rep = run_pair(PairInput{x, y, p.gt, p.id}, cfg, inner);
  });
  out.summary = summarize(out.reports, cfg);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json report_to_json(const RegistrationReport& r) {
  return json{
      {"pair_id", r.pair_id},
      {"ok", r.ok},
      {"failure_stage", r.failure_stage},
      {"error", r.error},
      {"error_kind", r.ok ? "" : to_string(static_cast<ErrorCode>(r.failure_code))},
      {"transform", transform_to_json(r.transform)},
      {"has_ground_truth", r.has_ground_truth},
      {"source_points", r.source_points},
      {"target_points", r.target_points},
      {"proposed", r.proposed},
      {"accepted", r.accepted},
      {"inliers", r.inliers},
      {"ransac_inliers", r.ransac_inliers},
      {"ransac_iterations", r.ransac_iterations},
      {"ir", number_or_null(r.ir)},
      {"ir_level1", number_or_null(r.ir_level1)},
      {"rre_deg", number_or_null(r.rre)},
      {"rte", number_or_null(r.rte)},
      {"rmse", number_or_null(r.rmse)},
      {"success_rmse", r.success_rmse},
      {"success_rre_rte", r.success_rre_rte},
      {"timings_ms",
       {{"descriptors", r.timings.descriptors_ms},
        {"matching", r.timings.matching_ms},
        {"voting", r.timings.voting_ms},
        {"ransac", r.timings.ransac_ms}}},
  };
}

json summary_to_json(const SuiteSummary& s) {
  return json{
      {"pairs", s.pairs},
      {"completed", s.completed},
      {"ir_mean", number_or_null(s.ir_mean)},
      {"ir_median", number_or_null(s.ir_median)},
      {"ir_level1_mean", number_or_null(s.ir_level1_mean)},
      {"ir_level1_median", number_or_null(s.ir_level1_median)},
      {"fmr", number_or_null(s.fmr)},
      {"rr", number_or_null(s.rr)},
      {"rr_rmse_mode", number_or_null(s.rr_rmse_mode)},
      {"rr_rre_rte_mode", number_or_null(s.rr_rre_rte_mode)},
      {"rre_mean", number_or_null(s.rre_mean)},
      {"rte_mean", number_or_null(s.rte_mean)},
      {"rmse_mean", number_or_null(s.rmse_mean)},
  };
}

json suite_to_json(const SuiteResult& result, const PipelineConfig& cfg) {
  json pairs = json::array();
  for (const auto& r : result.reports) pairs.push_back(report_to_json(r));
  return json{{"schema_version", kSchemaVersion},
              {"conventions", conventions()},
              {"config", to_json(cfg)},
              {"summary", summary_to_json(result.summary)},
              {"pairs", pairs}};
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"pair_id",     "ok",          "failure_stage", "source_points",
                                  "target_points", "proposed",  "accepted",      "inliers",
                                  "ransac_inliers", "ransac_iterations", "ir",   "ir_level1",
                                  "rre_deg",     "rte",         "rmse",          "success_rmse",
                                  "success_rre_rte"};
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 4; ++k) c.push_back("t" + std::to_string(r) + std::to_string(k));
    return c;
  }();
  return cols;
}

std::string suite_to_csv(const SuiteResult& result) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += '\n';
  for (const auto& r : result.reports) {
    std::vector<std::string> f = {r.pair_id,
                                  r.ok ? "1" : "0",
                                  r.failure_stage,
                                  std::to_string(r.source_points),
                                  std::to_string(r.target_points),
                                  std::to_string(r.proposed),
                                  std::to_string(r.accepted),
                                  std::to_string(r.inliers),
                                  std::to_string(r.ransac_inliers),
                                  std::to_string(r.ransac_iterations),
                                  fmt_double(r.ir),
                                  fmt_double(r.ir_level1),
                                  fmt_double(r.rre),
                                  fmt_double(r.rte),
                                  fmt_double(r.rmse),
                                  r.success_rmse ? "1" : "0",
                                  r.success_rre_rte ? "1" : "0"};
    const auto m = r.transform.row_major();
    for (int k = 0; k < 12; ++k) f.push_back(fmt_double(m[k]));
    for (std::size_t k = 0; k < f.size(); ++k) out += (k ? "," : "") + f[k];
    out += '\n';
  }
  return out;
}

std::string estimates_to_text(const std::vector<RegistrationReport>& reports) {
  std::string out = "# pair_id m00 m01 m02 m03 m10 ... m33 (row-major 4x4)\n";
  for (const auto& r : reports) {
    out += r.pair_id;
    for (double v : r.transform.row_major()) out += ' ' + fmt_double(v);
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, RigidTransform>> parse_estimates(const std::string& text) {
  std::vector<std::pair<std::string, RigidTransform>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) continue;
    std::array<double, 16> m{};
    for (auto& v : m) {
      std::string tok;
      if (!(ls >> tok)) throw ParseError("estimates row needs 16 numbers", 0, line_no);
      try {
        std::size_t used = 0;
        v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + tok + "' in estimates", 0, line_no);
      }
    }
    std::string extra;
    if (ls >> extra) throw ParseError("too many values in estimates row", 0, line_no);
    try {
      out.emplace_back(id, RigidTransform::from_row_major(m));
    } catch (const Error& e) {
      throw ParseError(e.what(), 0, line_no);
    }
  }
  return out;
}

SuiteResult evaluate_estimates(const PairManifest& manifest,
                               const std::vector<std::pair<std::string, RigidTransform>>& estimates,
                               const PipelineConfig& cfg) {
  cfg.validate();
  if (estimates.size() != manifest.pairs.size())
    throw Error(ErrorCode::kValidation, "estimates have " + std::to_string(estimates.size()) +
                                            " rows but the manifest has " +
                                            std::to_string(manifest.pairs.size()) + " pairs");
  for (std::size_t k = 0; k < estimates.size(); ++k)
    if (estimates[k].first != manifest.pairs[k].id)
      throw Error(ErrorCode::kValidation, "estimate row " + std::to_string(k) + " is for '" +
                                              estimates[k].first + "', manifest expects '" +
                                              manifest.pairs[k].id + "'");
  const EvalThresholds th = cfg.thresholds();
  SuiteResult out;
  out.reports.resize(manifest.pairs.size());
  parallel_for(manifest.pairs.size(), cfg.threads, [&](std::size_t k) {
    const ManifestPair& p = manifest.pairs[k];
    RegistrationReport& r = out.reports[k];
    r.pair_id = p.id;
    r.ok = true;
    r.has_ground_truth = true;
    r.transform = estimates[k].second;
    r.rre = rre(r.transform, p.gt);
    r.rte = rte(r.transform, p.gt);
    try {
      const PointCloud x = voxel_downsample(read_cloud(p.source), cfg.voxel_size);
      const PointCloud y = voxel_downsample(read_cloud(p.target), cfg.voxel_size);
      r.source_points = x.size();
      r.target_points = y.size();
      const auto gt_pairs = ground_truth_pairs(x, y, p.gt, th.inlier_dist);
      if (!gt_pairs.empty()) r.rmse = registration_rmse(x, y, r.transform, gt_pairs);
    } catch (const Error& e) {
      r.error = e.what();
    }
    r.success_rmse = registration_success(r, th, RecallMode::kRmse);
    r.success_rre_rte = registration_success(r, th, RecallMode::kRreRte);
  });
  out.summary = summarize(out.reports, cfg);
  return out;
}

std::string metrics_table(const SuiteResult& result, const PipelineConfig& cfg) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %12s %12s %12s %8s\n", "pair", "rre_deg", "rte", "rmse",
                "success");
  out += buf;
  const RecallMode mode = cfg.recall_mode();
  for (const auto& r : result.reports) {
    const bool ok = mode == RecallMode::kRmse ? r.success_rmse : r.success_rre_rte;
    std::snprintf(buf, sizeof buf, "%-24s %12.6g %12.6g %12.6g %8s\n", r.pair_id.c_str(), r.rre,
                  r.rte, r.rmse, ok ? "yes" : "no");
    out += buf;
  }
  const SuiteSummary& s = result.summary;
  std::snprintf(buf, sizeof buf,
                "pairs %zu  RR(%s) %.4f  RR(rmse) %.4f  RR(rre_rte) %.4f  RRE %.6g  RTE %.6g  RMSE %.6g\n",
                s.pairs, cfg.rr_mode.c_str(), s.rr, s.rr_rmse_mode, s.rr_rre_rte_mode, s.rre_mean,
                s.rte_mean, s.rmse_mean);
  out += buf;
  return out;
}

std::string write_synthetic_dataset(const SynthConfig& config, std::size_t count, double voxel_size,
                                    const std::string& out_dir) {
  config.validate();
  require(count >= 1, "at least one pair must be generated");
  require(voxel_size > 0.0, "voxel_size must be positive");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + out_dir + "': " + ec.message());

  PairManifest m;
  m.settings = json{{"preset", "synthetic"},
                    {"voxel_size", voxel_size},
                    {"ir_inlier_dist", 2.0 * voxel_size},
                    {"rr_rte", 0.05 * config.scale},
                    {"seed", config.seed}};
  for (std::size_t k = 0; k < count; ++k) {
    SynthConfig c = config;
    c.seed = config.seed + k;
    const SynthPair pair = synth_pair(c);
    char name[64];
    std::snprintf(name, sizeof name, "pair_%03zu", k);
    const std::string src = (fs::path(out_dir) / (std::string(name) + "_src.ply")).string();
    const std::string tgt = (fs::path(out_dir) / (std::string(name) + "_tgt.ply")).string();
    write_cloud(pair.source, src, CloudFormat::kPlyBinary);
    write_cloud(pair.target, tgt, CloudFormat::kPlyBinary);
    m.pairs.push_back({name, src, tgt, pair.gt});
  }
  const std::string path = (fs::path(out_dir) / "manifest.json").string();
  write_file(path, manifest_to_json(m, out_dir).dump(2) + "\n");
  return path;
}

}  // namespace gcreg
