#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcreg/gcreg.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  gcreg_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("c api basics") {
  CHECK(std::string(gcreg_version()) == "1.0.0");
  CHECK(std::string(gcreg_status_name(GCREG_E_NO_CONSENSUS)).size() > 0);

  gcreg_cloud* cloud = nullptr;
  const double xyz[] = {0, 0, 0, 1, 0, 0, 0, 1, 0};
  REQUIRE(gcreg_cloud_create(xyz, nullptr, 3, &cloud) == GCREG_OK);
  CHECK(gcreg_cloud_size(cloud) == 3);
  double back[9];
  CHECK(gcreg_cloud_points(cloud, back, 3) == 3);
  CHECK(back[3] == 1.0);
  CHECK(gcreg_cloud_points(cloud, back, 1) == 1);

  const double bad_normals[] = {0, 0, 5, 0, 0, 1, 0, 0, 1};
  gcreg_cloud* rejected = nullptr;
  CHECK(gcreg_cloud_create(xyz, bad_normals, 3, &rejected) == GCREG_E_VALIDATION);
  CHECK(rejected == nullptr);
  CHECK(std::string(gcreg_last_error()).size() > 0);

  const fs::path dir = fs::temp_directory_path() / "gcreg_capi";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "c.ply").string();
  CHECK(gcreg_cloud_write(cloud, path.c_str(), nullptr) == GCREG_OK);
  gcreg_cloud* read = nullptr;
  CHECK(gcreg_cloud_read(path.c_str(), "auto", &read) == GCREG_OK);
  CHECK(gcreg_cloud_size(read) == 3);
  gcreg_cloud_free(read);
  CHECK(gcreg_cloud_read((dir / "missing.ply").string().c_str(), nullptr, &read) == GCREG_E_IO);
  CHECK(std::string(gcreg_last_error()).find("missing.ply") != std::string::npos);
  CHECK(gcreg_cloud_read(path.c_str(), "pcd", &read) == GCREG_E_PARAMETER);
  gcreg_cloud_free(cloud);
  gcreg_cloud_free(nullptr);

  CHECK(gcreg_cloud_create(nullptr, nullptr, 3, &cloud) == GCREG_E_PARAMETER);
  fs::remove_all(dir);
}

TEST_CASE("c api config") {
  gcreg_config* cfg = nullptr;
  REQUIRE(gcreg_config_create(&cfg) == GCREG_OK);
  CHECK(gcreg_config_apply_preset(cfg, "outdoor") == GCREG_OK);
  CHECK(gcreg_config_apply_preset(cfg, "moon") == GCREG_E_PARAMETER);
  CHECK(gcreg_config_merge_json(cfg, "{\"voxel_size\": 0.5}") == GCREG_OK);
  CHECK(gcreg_config_merge_json(cfg, "{\"voxel_size\": 0.7, \"bogus\": 1}") == GCREG_E_PARAMETER);
  CHECK(gcreg_config_merge_json(cfg, "not json") == GCREG_E_PARAMETER);
  char* out = nullptr;
  REQUIRE(gcreg_config_to_json(cfg, &out) == GCREG_OK);
  const json j = json::parse(take(out));
  CHECK(j["voxel_size"] == 0.5);  // the failed merge left the config untouched
  CHECK(j["preset"] == "outdoor");
  CHECK(gcreg_config_validate(cfg) == GCREG_OK);
  CHECK(gcreg_config_merge_json(cfg, "{\"radii\": [5]}") == GCREG_OK);
  CHECK(gcreg_config_validate(cfg) == GCREG_E_PARAMETER);  // voting needs two levels
  gcreg_config_free(cfg);
}

TEST_CASE("c api registration") {
  gcreg_synth_config sc;
  gcreg_synth_config_default(&sc);
  sc.n_points = 3000;
  sc.seed = 4;
  gcreg_cloud *src = nullptr, *tgt = nullptr;
  double gt[16];
  REQUIRE(gcreg_synth_pair(&sc, &src, &tgt, gt) == GCREG_OK);
  gcreg_config* cfg = nullptr;
  gcreg_config_create(&cfg);
  gcreg_config_apply_preset(cfg, "synthetic");
  gcreg_config_merge_json(cfg, "{\"threads\": 1}");

  gcreg_report* rep = nullptr;
  REQUIRE(gcreg_register(src, tgt, gt, "p0", cfg, &rep) == GCREG_OK);
  CHECK(gcreg_report_status(rep) == GCREG_OK);
  double t[16];
  gcreg_report_transform(rep, t);
  CHECK(t[15] == 1.0);
  char* js = nullptr;
  REQUIRE(gcreg_report_to_json(rep, &js) == GCREG_OK);
  const json j = json::parse(take(js));
  CHECK(j["pair_id"] == "p0");
  CHECK(j["schema_version"] == 1);
  CHECK(j["success_rre_rte"] == true);
  gcreg_report_free(rep);

  const double xyz[] = {0, 0, 0};
  gcreg_cloud* one = nullptr;
  gcreg_cloud_create(xyz, nullptr, 1, &one);
  REQUIRE(gcreg_register(one, one, nullptr, "tiny", cfg, &rep) == GCREG_OK);
  CHECK(gcreg_report_status(rep) != GCREG_OK);
  gcreg_report_free(rep);

  CHECK(gcreg_register(src, tgt, gt, "p0", nullptr, &rep) == GCREG_E_PARAMETER);
  gcreg_cloud_free(one);
  gcreg_cloud_free(src);
  gcreg_cloud_free(tgt);
  gcreg_config_free(cfg);
}

TEST_CASE("c api suite") {
  const fs::path dir = fs::temp_directory_path() / "gcreg_capi_suite";
  fs::remove_all(dir);
  gcreg_synth_config sc;
  gcreg_synth_config_default(&sc);
  sc.n_points = 2000;
  sc.overlap_frac = 1.0;
  char* manifest = nullptr;
  REQUIRE(gcreg_write_dataset(&sc, 2, 0.025, dir.string().c_str(), &manifest) == GCREG_OK);
  const std::string mpath = take(manifest);
  CHECK(fs::exists(mpath));

  gcreg_config* cfg = nullptr;
  gcreg_config_create(&cfg);
  REQUIRE(gcreg_manifest_settings(mpath.c_str(), cfg) == GCREG_OK);
  gcreg_config_merge_json(cfg, "{\"threads\": 1}");
  char *js = nullptr, *csv = nullptr, *est = nullptr;
  REQUIRE(gcreg_run_suite(mpath.c_str(), cfg, &js, &csv, &est) == GCREG_OK);
  const json doc = json::parse(take(js));
  CHECK(doc["summary"]["rr"] == 1.0);
  CHECK(take(csv).rfind("pair_id,", 0) == 0);
  const std::string est_text = take(est);
  const std::string est_path = (dir / "est.txt").string();
  FILE* f = std::fopen(est_path.c_str(), "w");
  std::fputs(est_text.c_str(), f);
  std::fclose(f);
  char* table = nullptr;
  REQUIRE(gcreg_evaluate(mpath.c_str(), est_path.c_str(), cfg, &js, &table) == GCREG_OK);
  CHECK(json::parse(take(js))["summary"]["rr"] == 1.0);
  CHECK(take(table).find("pair_000") != std::string::npos);

  CHECK(gcreg_run_suite((dir / "none.json").string().c_str(), cfg, nullptr, nullptr, nullptr) == GCREG_E_IO);
  gcreg_config_free(cfg);
  fs::remove_all(dir);
}
