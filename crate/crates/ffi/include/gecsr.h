#ifndef GECSR_H
#define GECSR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum GecsrStatus {
  GECSR_STATUS_OK = 0,
  GECSR_STATUS_NULL_POINTER = 1,
  GECSR_STATUS_INVALID_STRING = 2,
  GECSR_STATUS_CONFIG = 3,
  GECSR_STATUS_CHECKPOINT = 4,
  GECSR_STATUS_INCOMPATIBLE = 5,
  GECSR_STATUS_NUMERIC = 6,
  GECSR_STATUS_SHAPE = 7,
  GECSR_STATUS_IO = 8,
  GECSR_STATUS_FORMAT = 9,
  GECSR_STATUS_BUFFER_TOO_SMALL = 10,
  GECSR_STATUS_OUT_OF_RANGE = 11,
  GECSR_STATUS_PANIC = 12,
  GECSR_STATUS_OTHER = 13,
} GecsrStatus;

typedef struct GecsrController GecsrController;

typedef struct GecsrManifest GecsrManifest;

typedef struct GecsrSample GecsrSample;

typedef struct GecsrTrace GecsrTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gecsr_version(void);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gecsr_last_error(void);

/**
 * `I1(kappa) / I0(kappa)` for `kappa >= 0`.
 *
 * # Safety
 * `out` must be a valid pointer to one `double`.
 */
enum GecsrStatus gecsr_bessel_ratio(double kappa, double *out);

/**
 * Parses and validates a dataset manifest.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GecsrStatus gecsr_manifest_from_json(const char *json, struct GecsrManifest **out);

/**
 * Default training scenario with the given seed and sample count.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GecsrStatus gecsr_manifest_default(uint64_t seed, size_t count, struct GecsrManifest **out);

/**
 * # Safety
 * `manifest` must be a live handle; the out pointers may be null.
 */
enum GecsrStatus gecsr_manifest_shape(const struct GecsrManifest *manifest,
                                      size_t *count,
                                      size_t *m,
                                      size_t *n);

/**
 * # Safety
 * `manifest` must be null or a handle not yet freed.
 */
void gecsr_manifest_free(struct GecsrManifest *manifest);

/**
 * Regenerates sample `index` of the manifest.
 *
 * # Safety
 * `manifest` must be a live handle and `out` a valid pointer.
 */
enum GecsrStatus gecsr_sample_new(const struct GecsrManifest *manifest,
                                  uint64_t index,
                                  struct GecsrSample **out);

/**
 * Measurement count `M` and signal length `N`.
 *
 * # Safety
 * `sample` must be a live handle; the out pointers may be null.
 */
enum GecsrStatus gecsr_sample_shape(const struct GecsrSample *sample, size_t *m, size_t *n);

/**
 * Copies the `M` magnitude measurements into `buf`.
 *
 * # Safety
 * `buf` must hold `len` writable doubles.
 */
enum GecsrStatus gecsr_sample_measurements(const struct GecsrSample *sample,
                                           double *buf,
                                           size_t len);

/**
 * Copies the true signal as separate real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must each hold `len` writable doubles.
 */
enum GecsrStatus gecsr_sample_signal(const struct GecsrSample *sample,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * # Safety
 * `sample` must be null or a handle not yet freed.
 */
void gecsr_sample_free(struct GecsrSample *sample);

/**
 * Loads a controller from a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GecsrStatus gecsr_controller_load(const char *path, struct GecsrController **out);

/**
 * Builds a controller from checkpoint JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GecsrStatus gecsr_controller_from_json(const char *json, struct GecsrController **out);

/**
 * Variant name; owned by the handle.
 *
 * # Safety
 * `controller` must be a live handle.
 */
const char *gecsr_controller_variant(const struct GecsrController *controller);

/**
 * # Safety
 * `controller` must be null or a handle not yet freed.
 */
void gecsr_controller_free(struct GecsrController *controller);

/**
 * Runs `layers` solver layers on a sample. A null controller selects the
 * fixed `0.9^t` schedule; static controllers use 0.5 past their depth.
 *
 * # Safety
 * `sample` must be a live handle, `controller` null or live, `out` valid.
 */
enum GecsrStatus gecsr_run(const struct GecsrSample *sample,
                           const struct GecsrController *controller,
                           size_t layers,
                           struct GecsrTrace **out);

/**
 * Number of layers the run completed.
 *
 * # Safety
 * `trace` must be a live handle.
 */
size_t gecsr_trace_len(const struct GecsrTrace *trace);

/**
 * Whether the run stopped early on a numeric failure.
 *
 * # Safety
 * `trace` must be a live handle.
 */
bool gecsr_trace_diverged(const struct GecsrTrace *trace);

/**
 * Per-layer NMSE in dB.
 *
 * # Safety
 * `buf` must hold `len` writable doubles.
 */
enum GecsrStatus gecsr_trace_nmse_db(const struct GecsrTrace *trace, double *buf, size_t len);

/**
 * Per-layer damping factors of both sides.
 *
 * # Safety
 * `beta_z` and `beta_x` must each hold `len` writable doubles.
 */
enum GecsrStatus gecsr_trace_betas(const struct GecsrTrace *trace,
                                   double *beta_z,
                                   double *beta_x,
                                   size_t len);

/**
 * Signal estimate after layer `t` (1-based), real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must each hold `len` writable doubles.
 */
enum GecsrStatus gecsr_trace_estimate(const struct GecsrTrace *trace,
                                      size_t t,
                                      double *re,
                                      double *im,
                                      size_t len);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void gecsr_trace_free(struct GecsrTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GECSR_H */
