// gcreg command-line front end. Talks to the library only through gcreg.h.
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gcreg/gcreg.h"

namespace {

using nlohmann::json;

struct Flags {
  std::optional<double> voxel;
  std::string radii;
  std::optional<double> dtol_mult;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> ransac_iters;
  std::optional<double> inlier_thresh;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool json_errors = false;
  std::string preset;
  bool no_voting = false;
  bool single_scale = false;
  bool mutual = false;
  std::string config_file;
  bool dump_config = false;
  std::string output;
};

/// Raised inside a command; carries the exit code and the library status.
struct Failure {
  int exit_code;
  gcreg_status status;
  std::string message;
};

bool g_json_errors = false;

int report_failure(const Failure& f) {
  if (g_json_errors) {
    const json j = {{"error",
                     {{"status", gcreg_status_name(f.status)},
                      {"code", static_cast<int>(f.status)},
                      {"exit_code", f.exit_code},
                      {"message", f.message}}}};
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "gcreg: " << f.message << '\n';
  }
  return f.exit_code;
}

int exit_code_for(gcreg_status s) {
  switch (s) {
    case GCREG_OK: return 0;
    case GCREG_E_NO_CONSENSUS:
    case GCREG_E_DEGENERATE:
    case GCREG_E_UNDEFINED_METRIC:
    case GCREG_E_NON_FINITE: return 2;
    default: return 1;
  }
}

void check(gcreg_status s) {
  if (s != GCREG_OK) throw Failure{exit_code_for(s), s, gcreg_last_error()};
}

void config_error(const std::string& msg) { throw Failure{1, GCREG_E_PARAMETER, msg}; }

/// Owning wrapper for strings handed out by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  gcreg_string_free(s);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure{1, GCREG_E_IO, "cannot open '" + path + "' for writing"};
  f << text;
  if (!f) throw Failure{1, GCREG_E_IO, "write to '" + path + "' failed"};
}

std::vector<double> parse_radii(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || errno) config_error("--radii: '" + tok + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) config_error("--radii needs at least one multiplier");
  return out;
}

std::optional<unsigned> env_threads() {
  const char* e = std::getenv("GC_REGISTER_THREADS");
  if (!e || !*e) return std::nullopt;
  char* end = nullptr;
  const unsigned long v = std::strtoul(e, &end, 10);
  if (*end != '\0') config_error(std::string("GC_REGISTER_THREADS='") + e + "' is not a count");
  return static_cast<unsigned>(v);
}

/// defaults < manifest settings < --preset < --config file < flags.
struct ConfigHandle {
  gcreg_config* ptr = nullptr;
  ConfigHandle() { check(gcreg_config_create(&ptr)); }
  ~ConfigHandle() { gcreg_config_free(ptr); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
};

void resolve_config(const Flags& f, gcreg_config* cfg, const char* manifest) {
  if (manifest) check(gcreg_manifest_settings(manifest, cfg));
  if (!f.preset.empty()) check(gcreg_config_apply_preset(cfg, f.preset.c_str()));
  if (!f.config_file.empty()) check(gcreg_config_merge_file(cfg, f.config_file.c_str()));

  json o = json::object();
  if (f.voxel) o["voxel_size"] = *f.voxel;
  if (!f.radii.empty()) o["radii"] = parse_radii(f.radii);
  if (f.dtol_mult) o["d_tol_mult"] = *f.dtol_mult;
  if (f.samples) o["samples"] = *f.samples;
  if (f.ransac_iters) o["ransac_iters"] = *f.ransac_iters;
  if (f.inlier_thresh) o["inlier_thresh"] = *f.inlier_thresh;
  if (f.seed) o["seed"] = *f.seed;
  if (f.threads) o["threads"] = *f.threads;
  else if (auto t = env_threads()) o["threads"] = *t;
  if (f.json_errors) o["json_errors"] = true;
  if (f.no_voting) o["voting"] = false;
  if (f.single_scale) o["single_scale"] = true;
  if (f.mutual) o["mutual"] = true;
  if (!f.output.empty()) o["output_json"] = f.output;
  check(gcreg_config_merge_json(cfg, o.dump().c_str()));
  check(gcreg_config_validate(cfg));
}

std::string config_json(gcreg_config* cfg) {
  char* s = nullptr;
  check(gcreg_config_to_json(cfg, &s));
  return take(s);
}

void add_pipeline_flags(CLI::App* app, Flags& f) {
  app->add_option("--voxel", f.voxel, "Voxel size for downsampling");
  app->add_option("--radii", f.radii, "Comma-separated FPFH radius multipliers, largest first");
  app->add_option("--dtol-mult", f.dtol_mult, "Voting tolerance as a multiple of the voxel size");
  app->add_option("--samples", f.samples, "Points sampled per cloud for matching");
  app->add_option("--ransac-iters", f.ransac_iters, "RANSAC iteration cap");
  app->add_option("--inlier-thresh", f.inlier_thresh, "RANSAC inlier threshold (0: 2 x voxel)");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--threads", f.threads, "Worker threads (0: all cores; env GC_REGISTER_THREADS)");
  app->add_flag("--json", f.json_errors, "JSON on stdout and JSON errors on stderr");
  app->add_option("--preset", f.preset, "indoor | outdoor | object | synthetic");
  app->add_flag("--no-voting", f.no_voting, "Use level-1 matches without consistent voting");
  app->add_flag("--single-scale", f.single_scale, "Extract and match level-1 descriptors only");
  app->add_flag("--mutual", f.mutual, "Keep only mutually consistent correspondences");
  app->add_option("--config", f.config_file, "JSON configuration file");
  app->add_flag("--dump-config", f.dump_config, "Print the resolved configuration and exit");
  app->add_option("-o,--output", f.output, "Write the JSON report here");
}

std::optional<std::vector<double>> read_gt(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream in(path);
  if (!in) throw Failure{1, GCREG_E_IO, "cannot open ground truth '" + path + "'"};
  std::vector<double> m;
  double v;
  while (in >> v) m.push_back(v);
  if (!in.eof() || m.size() != 16)
    throw Failure{1, GCREG_E_PARSE, "ground truth '" + path + "' must hold 16 numbers"};
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_json_number(const json& j) { return j.is_number() ? fmt(j.get<double>()) : "n/a"; }

int cmd_register(const Flags& f, const std::string& src_path, const std::string& tgt_path,
                 const std::string& gt_path) {
  ConfigHandle cfg;
  resolve_config(f, cfg.ptr, nullptr);
  if (f.dump_config) {
    std::cout << config_json(cfg.ptr) << '\n';
    return 0;
  }
  const auto gt = read_gt(gt_path);

  gcreg_cloud* src = nullptr;
  gcreg_cloud* tgt = nullptr;
  check(gcreg_cloud_read(src_path.c_str(), nullptr, &src));
  std::unique_ptr<gcreg_cloud, decltype(&gcreg_cloud_free)> src_guard(src, gcreg_cloud_free);
  check(gcreg_cloud_read(tgt_path.c_str(), nullptr, &tgt));
  std::unique_ptr<gcreg_cloud, decltype(&gcreg_cloud_free)> tgt_guard(tgt, gcreg_cloud_free);

  gcreg_report* rep = nullptr;
  check(gcreg_register(src, tgt, gt ? gt->data() : nullptr, "pair", cfg.ptr, &rep));
  std::unique_ptr<gcreg_report, decltype(&gcreg_report_free)> rep_guard(rep, gcreg_report_free);

  char* js = nullptr;
  check(gcreg_report_to_json(rep, &js));
  json report = json::parse(take(js));
  report["config"] = json::parse(config_json(cfg.ptr));
  if (!f.output.empty()) write_text(f.output, report.dump(2) + "\n");

  if (f.json_errors) {
    std::cout << report.dump(2) << '\n';
  } else {
    std::string line = "accepted " + std::to_string(report["accepted"].get<std::size_t>()) + "/" +
                       std::to_string(report["proposed"].get<std::size_t>()) + " ransac_inliers " +
                       std::to_string(report["ransac_inliers"].get<std::size_t>());
    if (gt)
      line += " rre_deg " + fmt_json_number(report["rre_deg"]) + " rte " + fmt_json_number(report["rte"]) +
              " ir " + fmt_json_number(report["ir"]);
    line += " transform";
    for (const auto& v : report["transform"]) line += " " + fmt(v.get<double>());
    std::cout << line << '\n';
  }

  const gcreg_status st = gcreg_report_status(rep);
  if (st != GCREG_OK) {
    const int code = exit_code_for(st) == 1 ? 1 : 2;
    throw Failure{code, st,
                  "registration failed at stage '" + report["failure_stage"].get<std::string>() +
                      "': " + report["error"].get<std::string>()};
  }
  return 0;
}

int cmd_bench(const Flags& f, const std::string& manifest, const std::string& csv_path,
              const std::string& estimates_path) {
  ConfigHandle cfg;
  resolve_config(f, cfg.ptr, manifest.c_str());
  if (f.dump_config) {
    std::cout << config_json(cfg.ptr) << '\n';
    return 0;
  }
  char* js = nullptr;
  char* csv = nullptr;
  char* est = nullptr;
  check(gcreg_run_suite(manifest.c_str(), cfg.ptr, &js, &csv, &est));
  const std::string json_text = take(js);
  const std::string csv_text = take(csv);
  const std::string est_text = take(est);
  if (!f.output.empty()) write_text(f.output, json_text + "\n");
  if (!csv_path.empty()) write_text(csv_path, csv_text);
  if (!estimates_path.empty()) write_text(estimates_path, est_text);

  if (f.json_errors) {
    std::cout << json_text << '\n';
  } else {
    const json s = json::parse(json_text)["summary"];
    std::cout << "pairs " << s["pairs"] << " completed " << s["completed"] << " ir_median "
              << fmt_json_number(s["ir_median"]) << " ir_level1_median "
              << fmt_json_number(s["ir_level1_median"]) << " fmr " << fmt_json_number(s["fmr"])
              << " rr " << fmt_json_number(s["rr"]) << " rre_mean " << fmt_json_number(s["rre_mean"])
              << " rte_mean " << fmt_json_number(s["rte_mean"]) << '\n';
  }
  return 0;
}

struct GenFlags {
  std::size_t pairs = 10;
  gcreg_synth_config synth{};
  std::string shape = "random-surface";
  double voxel = 0.025;
};

int cmd_gen(GenFlags g, const std::string& out_dir) {
  g.synth.shape = g.shape.c_str();
  char* path = nullptr;
  check(gcreg_write_dataset(&g.synth, g.pairs, g.voxel, out_dir.c_str(), &path));
  std::cout << take(path) << '\n';
  return 0;
}

int cmd_eval(const Flags& f, const std::string& estimates, const std::string& manifest) {
  ConfigHandle cfg;
  resolve_config(f, cfg.ptr, manifest.c_str());
  if (f.dump_config) {
    std::cout << config_json(cfg.ptr) << '\n';
    return 0;
  }
  char* js = nullptr;
  char* table = nullptr;
  check(gcreg_evaluate(manifest.c_str(), estimates.c_str(), cfg.ptr, &js, &table));
  const std::string json_text = take(js);
  const std::string table_text = take(table);
  if (!f.output.empty()) write_text(f.output, json_text + "\n");
  std::cout << (f.json_errors ? json_text + "\n" : table_text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale FPFH registration with consistent voting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gcreg_version());

  Flags f;
  std::string src, tgt, gt;
  auto* reg = app.add_subcommand("register", "Register a source cloud onto a target cloud");
  reg->add_option("source", src, "Source cloud (.ply or .xyz)")->required();
  reg->add_option("target", tgt, "Target cloud (.ply or .xyz)")->required();
  reg->add_option("--gt", gt, "File with the 16 row-major ground-truth entries");
  add_pipeline_flags(reg, f);

  std::string manifest, csv, estimates_out;
  auto* bench = app.add_subcommand("bench", "Run every pair of a manifest");
  bench->add_option("manifest", manifest, "Manifest JSON")->required();
  bench->add_option("--csv", csv, "Write per-pair CSV here");
  bench->add_option("--estimates", estimates_out, "Write estimated transforms here");
  add_pipeline_flags(bench, f);

  GenFlags g;
  gcreg_synth_config_default(&g.synth);
  std::string out_dir;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic benchmark");
  gen->add_option("out_dir", out_dir, "Output directory")->required();
  gen->add_option("--pairs", g.pairs, "Number of pairs")->capture_default_str();
  gen->add_option("--points", g.synth.n_points, "Points per view")->capture_default_str();
  gen->add_option("--overlap", g.synth.overlap_frac, "Shared fraction of each view")->capture_default_str();
  gen->add_option("--noise", g.synth.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  gen->add_option("--max-rotation", g.synth.max_rotation_deg, "Degrees")->capture_default_str();
  gen->add_option("--max-translation", g.synth.max_translation)->capture_default_str();
  gen->add_option("--scale", g.synth.scale, "Shape size")->capture_default_str();
  gen->add_option("--shape", g.shape, "sphere | box-room | random-surface")->capture_default_str();
  gen->add_option("--seed", g.synth.seed, "Seed of the first pair")->capture_default_str();
  gen->add_option("--voxel", g.voxel, "Voxel size recorded in the manifest settings")->capture_default_str();
  gen->add_flag("--json", f.json_errors, "JSON errors on stderr");

  std::string est_in, eval_manifest;
  auto* eval = app.add_subcommand("eval", "Score estimated transforms against a manifest");
  eval->add_option("estimates", est_in, "Estimates file (pair id + 16 numbers per line)")->required();
  eval->add_option("manifest", eval_manifest, "Manifest JSON")->required();
  add_pipeline_flags(eval, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  g_json_errors = f.json_errors;

  try {
    if (*reg) return cmd_register(f, src, tgt, gt);
    if (*bench) return cmd_bench(f, manifest, csv, estimates_out);
    if (*gen) return cmd_gen(g, out_dir);
    if (*eval) return cmd_eval(f, est_in, eval_manifest);
  } catch (const Failure& e) {
    return report_failure(e);
  } catch (const std::exception& e) {
    return report_failure({1, GCREG_E_INTERNAL, e.what()});
  }
  return 1;
}
