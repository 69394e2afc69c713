#ifndef FSDV_H
#define FSDV_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsdvStatus {
  FSDV_STATUS_OK = 0,
  FSDV_STATUS_NULL_POINTER = 1,
  FSDV_STATUS_INVALID_ARGUMENT = 2,
  FSDV_STATUS_VALIDATION = 3,
  FSDV_STATUS_PARSE = 4,
  FSDV_STATUS_IO = 5,
  FSDV_STATUS_GUARD_UNAVAILABLE = 6,
  FSDV_STATUS_ZERO_CAPACITY = 7,
  FSDV_STATUS_UNSTABLE_QUEUE = 8,
  /**
   * The requested metric is undefined for this run.
   */
  FSDV_STATUS_NOT_APPLICABLE = 9,
  FSDV_STATUS_RUNTIME = 10,
  FSDV_STATUS_PANIC = 11,
} FsdvStatus;

typedef enum FsdvMetric {
  FSDV_METRIC_TPR = 0,
  FSDV_METRIC_FPR = 1,
  FSDV_METRIC_PLR = 2,
  FSDV_METRIC_THROUGHPUT = 3,
  FSDV_METRIC_OVERHEAD_BITS = 4,
  FSDV_METRIC_DC = 5,
  FSDV_METRIC_DQ = 6,
  FSDV_METRIC_DP = 7,
  FSDV_METRIC_DT = 8,
  FSDV_METRIC_ROUNDS = 9,
  FSDV_METRIC_TPR_PER_VEHICLE = 10,
} FsdvMetric;

/**
 * Opaque scenario configuration.
 */
typedef struct FsdvConfig FsdvConfig;

/**
 * Opaque run report.
 */
typedef struct FsdvReport FsdvReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fsdv_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void fsdv_string_free(char *s);

struct FsdvConfig *fsdv_config_default(void);

/**
 * Parses sectioned `key = value` scenario text.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be writable.
 */
enum FsdvStatus fsdv_config_parse(const char *text, struct FsdvConfig **out);

/**
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be writable.
 */
enum FsdvStatus fsdv_config_load(const char *path, struct FsdvConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library not yet freed.
 */
void fsdv_config_free(struct FsdvConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FsdvStatus fsdv_config_set_seed(struct FsdvConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FsdvStatus fsdv_config_set_n_vehicles(struct FsdvConfig *cfg, uint32_t n);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FsdvStatus fsdv_config_set_rogue_fraction(struct FsdvConfig *cfg, double fraction);

/**
 * Switches to a speed-proportional threshold with the given `alpha`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum FsdvStatus fsdv_config_set_alpha(struct FsdvConfig *cfg, double alpha);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FsdvStatus fsdv_config_set_duration(struct FsdvConfig *cfg, double seconds);

/**
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum FsdvStatus fsdv_run(const struct FsdvConfig *cfg, struct FsdvReport **out);

/**
 * # Safety
 * `report` must be NULL or a handle from this library not yet freed.
 */
void fsdv_report_free(struct FsdvReport *report);

/**
 * Reads one metric. Undefined rates yield [`FsdvStatus::NotApplicable`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum FsdvStatus fsdv_report_metric(const struct FsdvReport *report,
                                   enum FsdvMetric metric,
                                   double *out);

/**
 * Report as a JSON document; free with [`fsdv_string_free`]. NULL on error.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *fsdv_report_json(const struct FsdvReport *report);

/**
 * Greenshield speed at density `rho`. `clamped` may be NULL.
 *
 * # Safety
 * `out` must be writable; `clamped` must be NULL or writable.
 */
enum FsdvStatus fsdv_guard_speed(double rho,
                                 double s_max,
                                 double rho_max,
                                 double *out,
                                 bool *clamped);

/**
 * Returns 1 for rogue, 0 for honest.
 */
int32_t fsdv_classify(double s_g, double s_rcvd, double s_th);

/**
 * Elects the guard among `n` vehicles given as parallel arrays.
 *
 * # Safety
 * `xs`, `ys` and `ids` must each point to `n` readable elements;
 * `out_guard` must be writable.
 */
enum FsdvStatus fsdv_select_guard(const double *xs,
                                  const double *ys,
                                  const uint32_t *ids,
                                  size_t n,
                                  uint32_t *out_guard);

/**
 * # Safety
 * `out` must be writable.
 */
enum FsdvStatus fsdv_communication_delay(uint64_t x_bits,
                                         double bandwidth_hz,
                                         double tx_power,
                                         double channel_coeff,
                                         double noise_power,
                                         double *out);

/**
 * `standard_form` selects `λ/(μ(μ−λ))` instead of the closed form.
 * `negative` may be NULL.
 *
 * # Safety
 * `out` must be writable; `negative` must be NULL or writable.
 */
enum FsdvStatus fsdv_queuing_delay(double arrival_rate,
                                   double service_rate,
                                   bool standard_form,
                                   double *out,
                                   bool *negative);

/**
 * Linear work model.
 *
 * # Safety
 * `out` must be writable.
 */
enum FsdvStatus fsdv_processing_delay(uint64_t x_bits,
                                      double cycles_per_bit,
                                      double fog_capability,
                                      double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum FsdvStatus fsdv_correct_detection_probability(double x_fog,
                                                   double p_reach,
                                                   double p_honest_correct,
                                                   double p_rogue_correct,
                                                   double *out);

/**
 * # Safety
 * `exact` and `approx` must be writable.
 */
enum FsdvStatus fsdv_incorrect_detection_probability(double x_fog,
                                                     double p_reach,
                                                     double p_honest_correct,
                                                     double p_rogue_correct,
                                                     double *exact,
                                                     double *approx);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSDV_H */
