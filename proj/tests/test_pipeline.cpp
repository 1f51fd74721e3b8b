#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "gcreg/error.hpp"
#include "gcreg/io.hpp"
#include "gcreg/pipeline.hpp"
#include "support.hpp"

using namespace gcreg;
using namespace testing_support;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gcreg_pipe_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PipelineConfig synthetic_config() {
  PipelineConfig c;
  apply_preset(c, "synthetic");
  c.threads = 1;
  return c;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double num(const std::string& s) { return s == "nan" ? NAN : std::stod(s); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("config presets, json and validation") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.radii == std::vector<double>{15, 10, 5});
  CHECK(c.ransac_threshold() == 2 * c.voxel_size);
  CHECK(c.ransac(1).max_iterations == 50000);

  apply_preset(c, "outdoor");
  CHECK(c.voxel_size == 0.3);
  CHECK(c.rr_mode == "rre_rte");
  CHECK(c.rr_rte == 2.0);
  apply_preset(c, "object");
  CHECK(c.loss_samples == 768);
  CHECK(code_of([&] { apply_preset(c, "lab"); }) == ErrorCode::kParameter);

  PipelineConfig d;
  merge_json(d, to_json(c));
  CHECK(to_json(d) == to_json(c));

  CHECK(code_of([&] { merge_json(d, json{{"voxel", 0.1}}); }) == ErrorCode::kParameter);
  CHECK(code_of([&] { merge_json(d, json{{"voxel_size", "big"}}); }) == ErrorCode::kParameter);

  // The preset is applied before the other keys of the same object.
  PipelineConfig e;
  merge_json(e, json{{"voxel_size", 0.07}, {"preset", "outdoor"}});
  CHECK(e.voxel_size == 0.07);
  CHECK(e.ir_inlier_dist == 0.6);

  PipelineConfig v;
  v.radii = {5};
  CHECK(code_of([&] { v.validate(); }) == ErrorCode::kParameter);
  v.single_scale = true;
  CHECK_NOTHROW(v.validate());
  v = PipelineConfig{};
  v.radii = {5, 10};
  CHECK_THROWS_AS(v.validate(), Error);
  v = PipelineConfig{};
  v.voxel_size = 0;
  CHECK_THROWS_AS(v.validate(), Error);
  v = PipelineConfig{};
  v.rr_mode = "both";
  CHECK_THROWS_AS(v.validate(), Error);
  v = PipelineConfig{};
  v.ransac_confidence = 1.0;
  CHECK_THROWS_AS(v.validate(), Error);

  CHECK(conventions().contains("rre"));
}

TEST_CASE("synthetic pairs") {
  SynthConfig s;
  s.n_points = 1500;
  s.seed = 5;
  const SynthPair a = synth_pair(s), b = synth_pair(s);
  CHECK(a.source.points == b.source.points);
  CHECK(a.target.points == b.target.points);
  CHECK(a.gt.row_major() == b.gt.row_major());

  s.overlap_frac = 1.0;
  s.max_rotation_deg = 0.0;
  s.max_translation = 0.0;
  const SynthPair same = synth_pair(s);
  CHECK(same.source.points == same.target.points);
  CHECK(same.gt.matrix() == Mat4::Identity());

  s.max_rotation_deg = 90.0;
  s.max_translation = 1.0;
  for (auto shape : {SynthShape::kSphere, SynthShape::kBoxRoom, SynthShape::kRandomSurface}) {
    s.shape = shape;
    const SynthPair moved = synth_pair(s);
    const PointCloud mapped = apply_transform(moved.source, moved.gt);
    REQUIRE(mapped.size() == moved.target.size());
    for (std::size_t i = 0; i < mapped.size(); ++i) CHECK(mapped.points[i] == moved.target.points[i]);
  }

  SynthConfig p;
  p.n_points = 1000;
  p.overlap_frac = 0.7;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    p.seed = seed;
    const SynthPair sp = synth_pair(p);
    const SpatialIndex index(sp.target);
    std::size_t shared = 0;
    for (const auto& x : sp.source.points)
      if (index.nearest(sp.gt.apply(x)).distance < 1e-9) ++shared;
    CHECK(std::abs(shared / 1000.0 - 0.7) <= 0.05);
  }

  SynthConfig bad;
  bad.overlap_frac = 0.0;
  CHECK_THROWS_AS(synth_pair(bad), Error);
  CHECK_THROWS_AS(synth_shape_from_string("torus"), Error);
}

TEST_CASE("identical clouds register exactly") {
  SynthConfig s;
  s.overlap_frac = 1.0;
  s.max_rotation_deg = 0.0;
  s.max_translation = 0.0;
  const SynthPair p = synth_pair(s);
  const RegistrationReport r = run_pair({p.source, p.target, RigidTransform(), "same"}, synthetic_config());
  REQUIRE(r.ok);
  CHECK(r.rre < 0.1);
  CHECK(r.rte < 1e-3);
  CHECK(r.success_rre_rte);
  CHECK(r.success_rmse);
  CHECK(r.accepted < r.proposed);
  CHECK(r.accepted > 0);
  CHECK((r.ir >= 0.0 && r.ir <= 1.0));
}

TEST_CASE("unrelated shapes are recorded as failures") {
  SynthConfig s;
  s.n_points = 3000;
  s.shape = SynthShape::kSphere;
  const SynthPair a = synth_pair(s);
  s.shape = SynthShape::kBoxRoom;
  s.scale = 2.0;
  s.seed = 3;
  const SynthPair b = synth_pair(s);
  RegistrationReport r;
  CHECK_NOTHROW(r = run_pair({a.source, b.target, RigidTransform(), "mismatch"}, synthetic_config()));
  CHECK_FALSE(r.success_rre_rte);
  CHECK_FALSE(r.success_rmse);
  if (!r.ok) CHECK_FALSE(r.failure_stage.empty());

  PointCloud one;
  one.points = {{0, 0, 0}};
  const RegistrationReport tiny = run_pair({one, one, std::nullopt, "tiny"}, synthetic_config());
  CHECK_FALSE(tiny.ok);
  CHECK_FALSE(tiny.failure_stage.empty());
  CHECK(tiny.failure_code != 0);
}

TEST_CASE("suite output, manifests and evaluation") {
  const fs::path dir = scratch("suite");
  SynthConfig s;
  s.n_points = 3000;
  s.noise_sigma = 0.005;
  const std::string manifest_path = write_synthetic_dataset(s, 3, 0.025, dir.string());
  PairManifest m = load_manifest(manifest_path);
  REQUIRE(m.pairs.size() == 3);
  CHECK(m.pairs[0].id == "pair_000");
  CHECK(fs::exists(m.pairs[2].target));

  PipelineConfig cfg;
  merge_json(cfg, m.settings);
  cfg.threads = 1;
  CHECK(cfg.preset == "synthetic");

  ManifestPair missing = m.pairs[0];
  missing.id = "missing";
  missing.source = (dir / "nope.ply").string();
  m.pairs.push_back(missing);

  const SuiteResult res = run_suite(m, cfg);
  REQUIRE(res.reports.size() == 4);
  CHECK(res.reports[3].failure_stage == "load");
  CHECK_FALSE(res.reports[3].ok);
  for (int k = 0; k < 3; ++k) CHECK(res.reports[k].pair_id == m.pairs[k].id);
  CHECK(res.summary.pairs == 4);
  CHECK(res.summary.rr == 0.75);

  // Recompute the summary from the CSV alone.
  const std::string csv = suite_to_csv(res);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  const auto header = split(line, ',');
  CHECK(header == csv_columns());
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  std::vector<double> irs, irs1, rre_ok, rte_ok, rmse_ok;
  double n = 0, rr_rmse = 0, rr_rt = 0, fmr = 0;
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    REQUIRE(f.size() == header.size());
    n += 1;
    const double ir = num(f[col("ir")]), ir1 = num(f[col("ir_level1")]);
    if (std::isfinite(ir)) {
      irs.push_back(ir);
      fmr += ir > cfg.fmr_min_ir;
    }
    if (std::isfinite(ir1)) irs1.push_back(ir1);
    const bool ok_rmse = f[col("success_rmse")] == "1", ok_rt = f[col("success_rre_rte")] == "1";
    rr_rmse += ok_rmse;
    rr_rt += ok_rt;
    if (ok_rt) {
      rre_ok.push_back(num(f[col("rre_deg")]));
      rte_ok.push_back(num(f[col("rte")]));
      rmse_ok.push_back(num(f[col("rmse")]));
    }
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
  };
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const SuiteSummary& sum = res.summary;
  CHECK(sum.ir_mean == mean(irs));
  CHECK(sum.ir_median == median(irs));
  CHECK(sum.ir_level1_median == median(irs1));
  CHECK(sum.fmr == fmr / irs.size());
  CHECK(sum.rr_rmse_mode == rr_rmse / n);
  CHECK(sum.rr_rre_rte_mode == rr_rt / n);
  CHECK(sum.rre_mean == mean(rre_ok));
  CHECK(sum.rte_mean == mean(rte_ok));
  CHECK(sum.rmse_mean == mean(rmse_ok));

  const json doc = suite_to_json(res, cfg);
  CHECK(doc["schema_version"] == kSchemaVersion);
  CHECK(doc["summary"]["rr"].get<double>() == sum.rr);
  CHECK(doc["pairs"].size() == 4);
  CHECK(doc["pairs"][3]["failure_stage"] == "load");
  CHECK(doc["config"]["voxel_size"].get<double>() == cfg.voxel_size);

  // Estimates survive a text round trip and score like the suite.
  std::vector<RegistrationReport> three(res.reports.begin(), res.reports.begin() + 3);
  m.pairs.pop_back();
  const auto est = parse_estimates(estimates_to_text(three));
  REQUIRE(est.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(est[k].second.row_major() == three[k].transform.row_major());

  std::vector<std::pair<std::string, RigidTransform>> truth;
  for (const auto& p : m.pairs) truth.emplace_back(p.id, p.gt);
  const SuiteResult exact = evaluate_estimates(m, truth, cfg);
  CHECK(exact.summary.rr == 1.0);
  for (const auto& r : exact.reports) {
    CHECK(r.rre < 1e-9);
    CHECK(r.rte == 0.0);
  }
  auto tilted = truth;
  for (auto& [id, t] : tilted) t = RigidTransform(axis_angle(Vec3::UnitZ(), 10.0 * std::numbers::pi / 180) * t.rotation(), t.translation());
  const SuiteResult off = evaluate_estimates(m, tilted, cfg);
  CHECK(off.summary.rr == 0.0);
  for (const auto& r : off.reports) CHECK(std::abs(r.rre - 10.0) < 1e-9);
  CHECK(metrics_table(off, cfg).find("pair_001") != std::string::npos);

  auto renamed = truth;
  renamed[1].first = "other";
  CHECK(code_of([&] { evaluate_estimates(m, renamed, cfg); }) == ErrorCode::kValidation);
  truth.pop_back();
  CHECK(code_of([&] { evaluate_estimates(m, truth, cfg); }) == ErrorCode::kValidation);

  try {
    parse_estimates("a 1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\nb 1 2 3\n");
    FAIL("short row accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
  const fs::path dir = scratch("manifest");
  const auto write = [&](const std::string& text) {
    const std::string p = (dir / "m.json").string();
    write_file(p, text);
    return p;
  };
  const std::string id16 = "[1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]";
  CHECK(code_of([&] { load_manifest(write("{\"pairs\": []}")); }) == ErrorCode::kValidation);
  CHECK(code_of([&] { load_manifest(write("{\"pairs\": ")); }) == ErrorCode::kValidation);
  CHECK(code_of([&] { load_manifest(write("{}")); }) == ErrorCode::kValidation);
  CHECK(code_of([&] {
          load_manifest(write("{\"pairs\": [{\"source\": \"a.ply\", \"target\": \"b.ply\", \"gt\": "
                              "[1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0.5,1]}]}"));
        }) == ErrorCode::kValidation);
  CHECK(code_of([&] {
          load_manifest(write("{\"settings\": 3, \"pairs\": [{\"source\": \"a.ply\", \"target\": \"b.ply\", \"gt\": " +
                              id16 + "}]}"));
        }) == ErrorCode::kValidation);
  CHECK(code_of([&] { load_manifest((dir / "absent.json").string()); }) == ErrorCode::kIo);

  const PairManifest ok = load_manifest(
      write("{\"pairs\": [{\"source\": \"sub/a.ply\", \"target\": \"/abs/b.ply\", \"gt\": " + id16 + "}]}"));
  CHECK(ok.pairs[0].id == "pair_0");
  CHECK(ok.pairs[0].source == (dir / "sub/a.ply").string());
  CHECK(ok.pairs[0].target == "/abs/b.ply");
  const json back = manifest_to_json(ok, dir.string());
  CHECK(back["pairs"][0]["source"] == "sub/a.ply");

  PipelineConfig cfg;
  CHECK(code_of([&] { run_suite(PairManifest{}, cfg); }) == ErrorCode::kValidation);
  fs::remove_all(dir);
}
