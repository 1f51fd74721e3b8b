#include "gcreg/gcreg.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "gcreg/io.hpp"
#include "gcreg/parallel.hpp"
#include "gcreg/pipeline.hpp"
#include "gcreg/synth.hpp"

struct gcreg_cloud {
  gcreg::PointCloud cloud;
};

struct gcreg_config {
  gcreg::PipelineConfig config;
};

struct gcreg_report {
  gcreg::RegistrationReport report;
};

namespace {

thread_local std::string g_last_error;

gcreg_status fail(gcreg_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

gcreg_status status_of(gcreg::ErrorCode code) { return static_cast<gcreg_status>(static_cast<int>(code)); }

/// Runs `body`, translating exceptions into a status and the thread's last error.
template <class F>
gcreg_status guard(F&& body) {
  g_last_error.clear();
  try {
    body();
    return GCREG_OK;
  } catch (const gcreg::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(GCREG_E_PARSE, std::string("JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(GCREG_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GCREG_E_INTERNAL, e.what());
  } catch (...) {
    return fail(GCREG_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw gcreg::Error(gcreg::ErrorCode::kParameter, std::string(what) + " is NULL");
}

gcreg::CloudFormat format_of(const char* f) {
  return f ? gcreg::cloud_format_from_string(f) : gcreg::CloudFormat::kAuto;
}

gcreg::SynthConfig synth_of(const gcreg_synth_config* c) {
  need(c, "synth config");
  gcreg::SynthConfig s;
  s.n_points = c->n_points;
  s.overlap_frac = c->overlap_frac;
  s.noise_sigma = c->noise_sigma;
  s.max_rotation_deg = c->max_rotation_deg;
  s.max_translation = c->max_translation;
  s.scale = c->scale;
  if (c->shape) s.shape = gcreg::synth_shape_from_string(c->shape);
  s.seed = c->seed;
  return s;
}

gcreg::RigidTransform transform_of(const double* m) {
  std::array<double, 16> a{};
  std::copy(m, m + 16, a.begin());
  return gcreg::RigidTransform::from_row_major(a);
}

void copy_transform(const gcreg::RigidTransform& t, double* out) {
  const auto m = t.row_major();
  std::copy(m.begin(), m.end(), out);
}

}  // namespace

extern "C" {

const char* gcreg_last_error(void) { return g_last_error.c_str(); }

const char* gcreg_status_name(gcreg_status status) {
  if (status == GCREG_OK) return "ok";
  if (status == GCREG_E_INTERNAL) return "internal";
  if (status >= GCREG_E_PARAMETER && status <= GCREG_E_VALIDATION)
    return gcreg::to_string(static_cast<gcreg::ErrorCode>(status));
  return "unknown";
}

const char* gcreg_version(void) { return "1.0.0"; }

void gcreg_string_free(char* s) { std::free(s); }

gcreg_status gcreg_cloud_read(const char* path, const char* format, gcreg_cloud** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<gcreg_cloud>();
    c->cloud = gcreg::read_cloud(path, format_of(format));
    *out = c.release();
  });
}

gcreg_status gcreg_cloud_write(const gcreg_cloud* cloud, const char* path, const char* format) {
  return guard([&] {
    need(cloud, "cloud");
    need(path, "path");
    gcreg::write_cloud(cloud->cloud, path, format_of(format));
  });
}

gcreg_status gcreg_cloud_create(const double* xyz, const double* normals, size_t n, gcreg_cloud** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    if (n) need(xyz, "xyz");
    auto c = std::make_unique<gcreg_cloud>();
    c->cloud.points.reserve(n);
    for (size_t i = 0; i < n; ++i) c->cloud.points.emplace_back(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]);
    if (normals)
      for (size_t i = 0; i < n; ++i)
        c->cloud.normals.emplace_back(normals[3 * i], normals[3 * i + 1], normals[3 * i + 2]);
    c->cloud.validate();
    *out = c.release();
  });
}

size_t gcreg_cloud_size(const gcreg_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

size_t gcreg_cloud_points(const gcreg_cloud* cloud, double* xyz, size_t capacity) {
  if (!cloud || !xyz) return 0;
  const size_t n = std::min(capacity, cloud->cloud.size());
  for (size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) xyz[3 * i + k] = cloud->cloud.points[i][k];
  return n;
}

void gcreg_cloud_free(gcreg_cloud* cloud) { delete cloud; }

gcreg_status gcreg_config_create(gcreg_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new gcreg_config();
  });
}

gcreg_status gcreg_config_apply_preset(gcreg_config* config, const char* preset) {
  return guard([&] {
    need(config, "config");
    need(preset, "preset");
    gcreg::apply_preset(config->config, preset);
  });
}

gcreg_status gcreg_config_merge_json(gcreg_config* config, const char* json) {
  return guard([&] {
    need(config, "config");
    need(json, "json");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw gcreg::Error(gcreg::ErrorCode::kParameter, std::string("configuration is not valid JSON: ") + e.what());
    }
    gcreg::PipelineConfig next = config->config;
    gcreg::merge_json(next, j);
    config->config = next;
  });
}

gcreg_status gcreg_config_merge_file(gcreg_config* config, const char* path) {
  return guard([&] {
    need(config, "config");
    need(path, "path");
    const std::string text = gcreg::read_file(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw gcreg::Error(gcreg::ErrorCode::kParameter,
                         std::string("config file '") + path + "' is not valid JSON: " + e.what());
    }
    gcreg::PipelineConfig next = config->config;
    gcreg::merge_json(next, j);
    config->config = next;
  });
}

gcreg_status gcreg_config_to_json(const gcreg_config* config, char** out) {
  return guard([&] {
    need(config, "config");
    need(out, "out");
    *out = dup_string(gcreg::to_json(config->config).dump(2));
  });
}

gcreg_status gcreg_config_validate(const gcreg_config* config) {
  return guard([&] {
    need(config, "config");
    config->config.validate();
  });
}

void gcreg_config_free(gcreg_config* config) { delete config; }

gcreg_status gcreg_register(const gcreg_cloud* source, const gcreg_cloud* target, const double* gt,
                            const char* pair_id, const gcreg_config* config, gcreg_report** out) {
  return guard([&] {
    need(source, "source");
    need(target, "target");
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    std::optional<gcreg::RigidTransform> truth;
    if (gt) truth = transform_of(gt);
    const unsigned threads = gcreg::resolve_threads(config->config.threads);
    auto r = std::make_unique<gcreg_report>();
    r->report = gcreg::run_pair(
        gcreg::PairInput{source->cloud, target->cloud, truth, pair_id ? pair_id : "pair"},
        config->config, threads);
    *out = r.release();
  });
}

gcreg_status gcreg_report_status(const gcreg_report* report) {
  if (!report) return GCREG_E_PARAMETER;
  if (report->report.ok) return GCREG_OK;
  return report->report.failure_code ? static_cast<gcreg_status>(report->report.failure_code)
                                     : GCREG_E_INTERNAL;
}

void gcreg_report_transform(const gcreg_report* report, double out[16]) {
  if (!report || !out) return;
  copy_transform(report->report.transform, out);
}

gcreg_status gcreg_report_to_json(const gcreg_report* report, char** out) {
  return guard([&] {
    need(report, "report");
    need(out, "out");
    nlohmann::json j = gcreg::report_to_json(report->report);
    j["schema_version"] = gcreg::kSchemaVersion;
    j["conventions"] = gcreg::conventions();
    *out = dup_string(j.dump(2));
  });
}

void gcreg_report_free(gcreg_report* report) { delete report; }

gcreg_status gcreg_manifest_settings(const char* manifest_path, gcreg_config* config) {
  return guard([&] {
    need(manifest_path, "manifest path");
    need(config, "config");
    const gcreg::PairManifest m = gcreg::load_manifest(manifest_path);
    gcreg::PipelineConfig next = config->config;
    gcreg::merge_json(next, m.settings);
    config->config = next;
  });
}

gcreg_status gcreg_run_suite(const char* manifest_path, const gcreg_config* config, char** json_out,
                             char** csv_out, char** estimates_out) {
  return guard([&] {
    need(manifest_path, "manifest path");
    need(config, "config");
    const gcreg::PairManifest m = gcreg::load_manifest(manifest_path);
    const gcreg::SuiteResult result = gcreg::run_suite(m, config->config);
    if (json_out) *json_out = dup_string(gcreg::suite_to_json(result, config->config).dump(2));
    if (csv_out) *csv_out = dup_string(gcreg::suite_to_csv(result));
    if (estimates_out) *estimates_out = dup_string(gcreg::estimates_to_text(result.reports));
  });
}

gcreg_status gcreg_evaluate(const char* manifest_path, const char* estimates_path,
                            const gcreg_config* config, char** json_out, char** table_out) {
  return guard([&] {
    need(manifest_path, "manifest path");
    need(estimates_path, "estimates path");
    need(config, "config");
    const gcreg::PairManifest m = gcreg::load_manifest(manifest_path);
    std::vector<std::pair<std::string, gcreg::RigidTransform>> est;
    try {
      est = gcreg::parse_estimates(gcreg::read_file(estimates_path));
    } catch (const gcreg::ParseError& e) {
      throw gcreg::ParseError(std::string(estimates_path) + ": " + e.detail(), e.byte_offset(), e.line());
    }
    const gcreg::SuiteResult result = gcreg::evaluate_estimates(m, est, config->config);
    if (json_out) *json_out = dup_string(gcreg::suite_to_json(result, config->config).dump(2));
    if (table_out) *table_out = dup_string(gcreg::metrics_table(result, config->config));
  });
}

void gcreg_synth_config_default(gcreg_synth_config* config) {
  if (!config) return;
  const gcreg::SynthConfig d;
  config->n_points = d.n_points;
  config->overlap_frac = d.overlap_frac;
  config->noise_sigma = d.noise_sigma;
  config->max_rotation_deg = d.max_rotation_deg;
  config->max_translation = d.max_translation;
  config->scale = d.scale;
  config->shape = gcreg::to_string(d.shape);
  config->seed = d.seed;
}

gcreg_status gcreg_synth_pair(const gcreg_synth_config* config, gcreg_cloud** source,
                              gcreg_cloud** target, double gt[16]) {
  return guard([&] {
    need(source, "source");
    need(target, "target");
    *source = nullptr;
    *target = nullptr;
    gcreg::SynthPair p = gcreg::synth_pair(synth_of(config));
    auto s = std::make_unique<gcreg_cloud>();
    auto t = std::make_unique<gcreg_cloud>();
    s->cloud = std::move(p.source);
    t->cloud = std::move(p.target);
    if (gt) copy_transform(p.gt, gt);
    *source = s.release();
    *target = t.release();
  });
}

gcreg_status gcreg_write_dataset(const gcreg_synth_config* config, size_t count, double voxel_size,
                                 const char* out_dir, char** manifest_path_out) {
  return guard([&] {
    need(out_dir, "out_dir");
    const std::string path = gcreg::write_synthetic_dataset(synth_of(config), count, voxel_size, out_dir);
    if (manifest_path_out) *manifest_path_out = dup_string(path);
  });
}

}  // extern "C"
