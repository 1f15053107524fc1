/* C interface to the coretemp library. All functions are thread-compatible;
 * ct_last_error() is per thread. Strings returned by the library stay valid
 * until the next call on the same thread. */
#ifndef CORETEMP_H
#define CORETEMP_H

#include <stddef.h>

#if defined(_WIN32)
#define CT_API __declspec(dllexport)
#else
#define CT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum ct_status {
  CT_OK = 0,
  CT_ERR_INTERNAL = 1,
  CT_ERR_CONFIG = 2,
  CT_ERR_SIMULATION = 3, /* SOC bounds or voltage cutoff */
  CT_ERR_DIVERGENCE = 4,
  CT_ERR_STARVED = 5,    /* no reliable target windows */
  CT_ERR_IO = 6,
  CT_ERR_PARSE = 7,
  CT_ERR_INVALID_ARGUMENT = 8,
  CT_ERR_DOMAIN = 9,
  CT_ERR_DIMENSION = 10,
  CT_ERR_NUMERIC = 11,
  CT_ERR_UNLABELED = 12,
  CT_ERR_STALE_CACHE = 13
} ct_status;

typedef struct ct_model ct_model;
typedef struct ct_series ct_series;

typedef struct ct_run_options {
  const char* config_path; /* NULL: built-in defaults */
  const char* out_dir;
  const char* checkpoint;
  const char* data_dir;
  const char* target_csv;
  const char* run_dir;
  size_t workers;          /* 0: take from the config */
  double from_fraction;    /* < 0: unset */
} ct_run_options;

CT_API const char* ct_version(void);
CT_API const char* ct_last_error(void);
CT_API const char* ct_status_name(ct_status status);

CT_API void ct_run_options_init(ct_run_options* opts);
/* command: simulate | generate | pretrain | adapt | evaluate |
 * study-perturb | study-sensitivity | export-plots */
CT_API ct_status ct_run(const char* command, const ct_run_options* opts);

CT_API ct_status ct_model_load(const char* path, ct_model** out);
CT_API void ct_model_free(ct_model* model);
CT_API size_t ct_model_window(const ct_model* model);
/* Writes the SHA-256 of the model's normalization stats (65 bytes incl. NUL). */
CT_API ct_status ct_model_norm_hash(const ct_model* model, char* buf, size_t cap);

CT_API ct_status ct_series_load(const char* path, ct_series** out);
/* Simulates the `profile` section of a config (NULL: defaults). */
CT_API ct_status ct_series_simulate(const char* config_path, ct_series** out);
CT_API void ct_series_free(ct_series* series);
CT_API size_t ct_series_length(const ct_series* series);
CT_API int ct_series_labeled(const ct_series* series);
/* name: time_s, current_a, voltage_v, surf_temp_c, core_temp_c, coolant_temp_c */
CT_API ct_status ct_series_column(const ct_series* series, const char* name, double* out, size_t cap);

/* Core-temperature estimate at the end of every window (given stride).
 * *n_written receives the number of predictions even if cap is too small. */
CT_API ct_status ct_model_predict(const ct_model* model, const ct_series* series, size_t stride, double* out,
                                  size_t cap, size_t* n_written);

/* Column-major sample sets: x is dim x n, y is dim x m. */
CT_API ct_status ct_mmd2(const double* x, size_t n, const double* y, size_t m, size_t dim, const double* bandwidths,
                         size_t n_bandwidths, double* out);
CT_API ct_status ct_coral(const double* x, size_t n, const double* y, size_t m, size_t dim, double* out);

#ifdef __cplusplus
}
#endif

#endif
