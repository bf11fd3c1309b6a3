/*
 * C interface to the desync timing side-channel toolkit.
 *
 * Every function returns a desync_status. On failure a message describing the
 * last error on the calling thread is available from desync_last_error().
 * Handles are opaque; release them with the matching *_free function. Strings
 * returned through char** out-parameters are owned by the caller and released
 * with desync_string_free().
 *
 * Durations are in seconds throughout.
 */
#ifndef DESYNC_DESYNC_H
#define DESYNC_DESYNC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DESYNC_BUILDING_LIBRARY)
#    define DESYNC_API __declspec(dllexport)
#  else
#    define DESYNC_API __declspec(dllimport)
#  endif
#else
#  define DESYNC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as process exit codes for the CLI. */
typedef enum desync_status {
  DESYNC_OK = 0,
  DESYNC_ERR_INTERNAL = 1,
  DESYNC_ERR_CONFIG = 2,
  DESYNC_ERR_DATA = 3,
  DESYNC_ERR_IO = 4
} desync_status;

typedef struct desync_profiles desync_profiles;
typedef struct desync_trace desync_trace;

typedef struct desync_delay {
  double mean;     /* seconds */
  double variance; /* seconds^2 */
} desync_delay;

typedef struct desync_summary {
  size_t count;
  double mean;
  double min;
  double max;
  double stddev;
} desync_summary;

typedef struct desync_profile_info {
  size_t cluster_count;
  double aggregate_mean;
  double declared_min;
  double declared_max;
  double domain_lo;
  double domain_hi;
} desync_profile_info;

typedef struct desync_calibration {
  double fastest_mean;
  double slowest_mean;
  double delta_t;
  int magnitude;
  int variance_exponent;
  size_t cluster_count;
  size_t sample_count;
  desync_delay result;
  char inputs_digest[65];
} desync_calibration;

typedef struct desync_tvla {
  double t_statistic;
  size_t n_fixed;
  size_t n_random;
  double threshold;
  int leaks;
  int low_power;
  double fixed_input; /* NaN for bare t-tests */
} desync_tvla;

typedef struct desync_tvla_options {
  size_t n_per_set;      /* 0 selects 5000 */
  int has_fixed_input;   /* 0: drawn from the domain with the seed */
  double fixed_input;
  int per_layer;         /* 0: one activation per observation */
  size_t layer_width;
  double threshold;      /* 0 selects 4.5 */
} desync_tvla_options;

DESYNC_API const char* desync_version(void);
DESYNC_API const char* desync_last_error(void);
DESYNC_API void desync_string_free(char* s);

/* Activation functions ("relu", "sigmoid", "tanh"). */
DESYNC_API desync_status desync_activation_eval(const char* kind, double x, double* out);
DESYNC_API desync_status desync_host_time(const char* kind, double x, size_t repetitions, double* seconds,
                                          int* resolution_warning);

/* Timing profiles. */
DESYNC_API desync_status desync_profiles_builtin(desync_profiles** out);
DESYNC_API desync_status desync_profiles_load(const char* path, desync_profiles** out);
DESYNC_API desync_status desync_profiles_save(const desync_profiles* p, const char* path);
DESYNC_API void desync_profiles_free(desync_profiles* p);
DESYNC_API size_t desync_profiles_count(const desync_profiles* p);
/* Borrowed pointer, valid while the handle lives. NULL when out of range. */
DESYNC_API const char* desync_profiles_kind(const desync_profiles* p, size_t index);
DESYNC_API desync_status desync_profiles_info(const desync_profiles* p, const char* kind, desync_profile_info* out);
DESYNC_API desync_status desync_sample_time(const desync_profiles* p, const char* kind, double x, uint64_t seed,
                                            double* out);

/* Traces. `sampler` is "uniform", "uniform(lo,hi)" or "fixed(x)"; NULL means "uniform". */
DESYNC_API desync_status desync_trace_capture(const desync_profiles* p, const char* kind, size_t n,
                                              const char* sampler, uint64_t seed, desync_trace** out);
DESYNC_API desync_status desync_trace_protect(const desync_trace* t, desync_delay delay, uint64_t seed,
                                              desync_trace** out);
DESYNC_API desync_status desync_trace_load(const char* csv_path, desync_trace** out);
DESYNC_API desync_status desync_trace_save(const desync_trace* t, const char* csv_path);
DESYNC_API void desync_trace_free(desync_trace* t);
DESYNC_API size_t desync_trace_size(const desync_trace* t);
DESYNC_API int desync_trace_is_protected(const desync_trace* t);
/* Copies up to `capacity` values; `written` receives the count copied. Either array may be NULL. */
DESYNC_API desync_status desync_trace_entries(const desync_trace* t, double* inputs, double* durations,
                                              size_t capacity, size_t* written);
DESYNC_API desync_status desync_trace_summary(const desync_trace* t, desync_summary* out);

/* Countermeasure. `name` is "calibrated", "table2-regime" or "none". */
DESYNC_API desync_status desync_delay_preset(const char* name, desync_delay* out);
DESYNC_API desync_status desync_sample_delay(desync_delay delay, uint64_t seed, double* out);
DESYNC_API desync_status desync_order_of_magnitude(double n, int* out);
DESYNC_API desync_status desync_calibrate(const double* timings, size_t n, desync_calibration* out);

/* Leakage assessment. */
DESYNC_API desync_status desync_welch_t(const double* xs, size_t nx, const double* ys, size_t ny,
                                        desync_tvla* out);
/* `delay` may be NULL for an unprotected campaign; `options` may be NULL for defaults. */
DESYNC_API desync_status desync_tvla_campaign(const desync_profiles* p, const char* kind, const desync_delay* delay,
                                              const desync_tvla_options* options, uint64_t seed, desync_tvla* out);
/* `hypothesis` may be NULL. `predicted` receives an index into the profile set. */
DESYNC_API desync_status desync_distinguish(const double* samples, size_t n, const desync_profiles* p,
                                            const desync_delay* hypothesis, size_t* predicted);
/* `per_kind` receives one accuracy per profile, in profile order; it may be NULL. */
DESYNC_API desync_status desync_accuracy_sweep(const desync_profiles* p, const desync_delay* delay,
                                               size_t queries_per_trial, size_t trials, uint64_t seed,
                                               double* per_kind, size_t capacity, double* overall);

/* Overhead model. */
DESYNC_API desync_status desync_neuron_time_range(double mult_time, double add_time, size_t fan_in,
                                                  double activation_min, double activation_max, double* out_min,
                                                  double* out_max);
DESYNC_API desync_status desync_overhead_percent(double base_min, double base_max, double prot_min, double prot_max,
                                                 double* pct_min, double* pct_max);

/* Experiment commands, as exposed by the CLI.
 * verb: "profile", "calibrate", "protect", "tvla", "distinguish", "overhead", "repro".
 * request_json: a JSON object (NULL or "" for defaults).
 * response_json: receives the result document; release with desync_string_free. */
DESYNC_API desync_status desync_run(const char* verb, const char* request_json, char** response_json);

#ifdef __cplusplus
}
#endif

#endif /* DESYNC_DESYNC_H */
