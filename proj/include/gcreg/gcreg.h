/* C interface to the gcreg registration library. */
#ifndef GCREG_H
#define GCREG_H

#include <stddef.h>
#include <stdint.h>

#if defined(GCREG_BUILDING)
#define GCREG_API __attribute__((visibility("default")))
#else
#define GCREG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gcreg_status {
  GCREG_OK = 0,
  GCREG_E_PARAMETER = 1,
  GCREG_E_DEGENERATE = 2,
  GCREG_E_NO_CONSENSUS = 3,
  GCREG_E_PARSE = 4,
  GCREG_E_IO = 5,
  GCREG_E_UNDEFINED_METRIC = 6,
  GCREG_E_NON_FINITE = 7,
  GCREG_E_VALIDATION = 8,
  GCREG_E_INTERNAL = 99
} gcreg_status;

typedef struct gcreg_cloud gcreg_cloud;
typedef struct gcreg_config gcreg_config;
typedef struct gcreg_report gcreg_report;

/* Message of the last failed call on this thread; "" if none. */
GCREG_API const char* gcreg_last_error(void);
GCREG_API const char* gcreg_status_name(gcreg_status status);
GCREG_API const char* gcreg_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
GCREG_API void gcreg_string_free(char* s);

/* Clouds. format: NULL or "auto", "ply", "ply-ascii", "ply-binary", "xyz". */
GCREG_API gcreg_status gcreg_cloud_read(const char* path, const char* format, gcreg_cloud** out);
GCREG_API gcreg_status gcreg_cloud_write(const gcreg_cloud* cloud, const char* path,
                                         const char* format);
/* xyz: 3n doubles. normals may be NULL. */
GCREG_API gcreg_status gcreg_cloud_create(const double* xyz, const double* normals, size_t n,
                                          gcreg_cloud** out);
GCREG_API size_t gcreg_cloud_size(const gcreg_cloud* cloud);
/* Copies up to capacity points (3 doubles each); returns the number copied. */
GCREG_API size_t gcreg_cloud_points(const gcreg_cloud* cloud, double* xyz, size_t capacity);
GCREG_API void gcreg_cloud_free(gcreg_cloud* cloud);

/* Pipeline configuration, starting from the indoor defaults. */
GCREG_API gcreg_status gcreg_config_create(gcreg_config** out);
GCREG_API gcreg_status gcreg_config_apply_preset(gcreg_config* config, const char* preset);
/* Overlays a flat JSON object; unknown keys are rejected. */
GCREG_API gcreg_status gcreg_config_merge_json(gcreg_config* config, const char* json);
GCREG_API gcreg_status gcreg_config_merge_file(gcreg_config* config, const char* path);
GCREG_API gcreg_status gcreg_config_to_json(const gcreg_config* config, char** out);
GCREG_API gcreg_status gcreg_config_validate(const gcreg_config* config);
GCREG_API void gcreg_config_free(gcreg_config* config);

/* Registers source onto target. gt (16 row-major doubles) may be NULL.
 * A report is produced even when a stage fails; check gcreg_report_status. */
GCREG_API gcreg_status gcreg_register(const gcreg_cloud* source, const gcreg_cloud* target,
                                      const double* gt, const char* pair_id,
                                      const gcreg_config* config, gcreg_report** out);
GCREG_API gcreg_status gcreg_report_status(const gcreg_report* report);
GCREG_API void gcreg_report_transform(const gcreg_report* report, double out[16]);
GCREG_API gcreg_status gcreg_report_to_json(const gcreg_report* report, char** out);
GCREG_API void gcreg_report_free(gcreg_report* report);

/* Copies the manifest's "settings" object into config. */
GCREG_API gcreg_status gcreg_manifest_settings(const char* manifest_path, gcreg_config* config);

/* Runs every manifest pair. Any of the out pointers may be NULL. */
GCREG_API gcreg_status gcreg_run_suite(const char* manifest_path, const gcreg_config* config,
                                       char** json_out, char** csv_out, char** estimates_out);

/* Scores an estimates file against a manifest's ground truth. */
GCREG_API gcreg_status gcreg_evaluate(const char* manifest_path, const char* estimates_path,
                                      const gcreg_config* config, char** json_out,
                                      char** table_out);

typedef struct gcreg_synth_config {
  size_t n_points;
  double overlap_frac;
  double noise_sigma;
  double max_rotation_deg;
  double max_translation;
  double scale;
  const char* shape; /* "sphere", "box-room", "random-surface" */
  uint64_t seed;
} gcreg_synth_config;

GCREG_API void gcreg_synth_config_default(gcreg_synth_config* config);
GCREG_API gcreg_status gcreg_synth_pair(const gcreg_synth_config* config, gcreg_cloud** source,
                                        gcreg_cloud** target, double gt[16]);
/* Writes count pairs plus manifest.json into out_dir; *manifest_path_out may be NULL. */
GCREG_API gcreg_status gcreg_write_dataset(const gcreg_synth_config* config, size_t count,
                                           double voxel_size, const char* out_dir,
                                           char** manifest_path_out);

#ifdef __cplusplus
}
#endif

#endif
