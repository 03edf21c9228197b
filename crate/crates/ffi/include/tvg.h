#ifndef TVG_H
#define TVG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TvgStatus {
  TVG_STATUS_OK = 0,
  // Invalid parameter or argument.
  TVG_STATUS_USAGE = 1,
  // Shape, format, config or I/O problem.
  TVG_STATUS_DATA = 2,
  // Factorization failure, non-finite values, antiparallel embeddings.
  TVG_STATUS_NUMERICAL = 3,
  TVG_STATUS_NULL_POINTER = 4,
  // A Rust panic was caught at the boundary.
  TVG_STATUS_PANIC = 5,
} TvgStatus;

typedef enum TvgMetric {
  TVG_METRIC_L2 = 0,
  TVG_METRIC_GRAD_L2 = 1,
} TvgMetric;

// Opaque latent video, `frames x positions x channels`.
typedef struct TvgLatent TvgLatent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// successful call. Valid until the next library call on the same thread.
const char *tvg_last_error_message(void);

// Library version as a static nul-terminated string.
const char *tvg_version(void);

// Copies `frames * positions * channels` frame-major values into a new latent.
//
// # Safety
// `data` must point to that many readable doubles; `out` must be writable.
enum TvgStatus tvg_latent_new(size_t frames,
                              size_t positions,
                              size_t channels,
                              const double *data,
                              struct TvgLatent **out);

// Releases a latent. Null is a no-op.
//
// # Safety
// `latent` must come from this library and not be used afterwards.
void tvg_latent_free(struct TvgLatent *latent);

// # Safety
// `latent` must be a live handle; the three out-pointers must be writable.
enum TvgStatus tvg_latent_dims(const struct TvgLatent *latent,
                               size_t *frames,
                               size_t *positions,
                               size_t *channels);

// Copies the frame-major values into `buf`, whose length must match exactly.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum TvgStatus tvg_latent_copy_data(const struct TvgLatent *latent, double *buf, size_t len);

// Reads a TVGL file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum TvgStatus tvg_latent_read(const char *path, struct TvgLatent **out);

// Writes a TVGL file.
//
// # Safety
// `latent` must be a live handle; `path` a nul-terminated string.
enum TvgStatus tvg_latent_write(const struct TvgLatent *latent, const char *path);

// Replaces the intermediate frames by the endpoint GPR posterior mean.
// A `length_scale` of zero or less selects the median heuristic.
//
// # Safety
// `input` must be a live handle; `out` must be writable.
enum TvgStatus tvg_gpr_smooth(const struct TvgLatent *input,
                              double length_scale,
                              double noise_variance,
                              struct TvgLatent **out);

// Frequency-aware fusion. `rev` is the raw reverse-direction latent; it
// is re-reversed internally.
//
// # Safety
// `fwd` and `rev` must be live handles; `out` must be writable.
enum TvgStatus tvg_fuse(const struct TvgLatent *fwd,
                        const struct TvgLatent *rev,
                        double lambda_start,
                        double lambda_end,
                        double lambda_freq,
                        size_t window,
                        struct TvgLatent **out);

// Close-distance frame selection with a [`TvgMetric`] value. When
// `sources` is non-null it receives one byte per output frame: 0 for
// forward, 1 for reverse.
//
// # Safety
// `fwd` and `rev` must be live handles; `out` must be writable; `sources`
// null or pointing to `sources_len` writable bytes.
enum TvgStatus tvg_select_frames(const struct TvgLatent *fwd,
                                 const struct TvgLatent *rev,
                                 uint32_t metric,
                                 struct TvgLatent **out,
                                 uint8_t *sources,
                                 size_t sources_len);

// SLERP schedule between two `(tokens, dim)` embeddings, written into
// `out` as `frames x tokens x dim`.
//
// # Safety
// `a` and `b` must point to `tokens * dim` doubles; `out` to `out_len`
// writable doubles.
enum TvgStatus tvg_slerp_schedule(const double *a,
                                  const double *b,
                                  size_t tokens,
                                  size_t dim,
                                  size_t frames,
                                  double w_start,
                                  double w_end,
                                  bool per_token,
                                  double *out,
                                  size_t out_len);

// Runs the pipeline from a JSON config. Relative paths in the config are
// taken relative to the working directory. `report` receives the report
// JSON, to be released with [`tvg_string_free`]; it may be null.
//
// # Safety
// `config_json` must be a nul-terminated string; `out` must be writable;
// `report` null or writable.
enum TvgStatus tvg_run(const char *config_json, struct TvgLatent **out, char **report);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void tvg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVG_H */
