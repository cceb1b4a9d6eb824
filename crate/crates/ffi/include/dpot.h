#ifndef DPOT_H
#define DPOT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DpotStatus {
  DPOT_STATUS_OK = 0,
  DPOT_STATUS_INVALID_PARAMETER = 1,
  DPOT_STATUS_DIMENSION_MISMATCH = 2,
  DPOT_STATUS_PROTOCOL_FAULT = 3,
  DPOT_STATUS_RETRIES_EXHAUSTED = 4,
  DPOT_STATUS_CONFIG = 5,
  DPOT_STATUS_IO = 6,
  DPOT_STATUS_NULL_POINTER = 7,
  DPOT_STATUS_PANIC = 8,
} DpotStatus;

// A validated channel.
typedef struct DpotChannel DpotChannel;

// A seeded random stream.
typedef struct DpotStream DpotStream;

// One AWEC execution. `o_b` is meaningful only when `erased` is false.
typedef struct DpotAwecResult {
  bool erased;
  int64_t o_a;
  int64_t o_b;
} DpotAwecResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next failing call.
const char *dpot_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a pointer obtained from this library and not yet freed.
void dpot_string_free(char *s);

// Creates a channel. `kind` is a channel key such as `trusted-laplace`;
// `leak_index` is 1-based and 0 means none.
//
// # Safety
// `kind` must be a nul-terminated string and `out` writable.
enum DpotStatus dpot_channel_new(const char *kind,
                                 size_t n,
                                 double eps,
                                 double delta,
                                 size_t leak_index,
                                 struct DpotChannel **out_channel);

// # Safety
// `channel` must be null or a handle from [`dpot_channel_new`] not yet freed.
void dpot_channel_free(struct DpotChannel *channel);

struct DpotStream *dpot_stream_new(uint64_t seed);

// # Safety
// `stream` must be null or a handle from [`dpot_stream_new`] not yet freed.
void dpot_stream_free(struct DpotStream *stream);

// `<x, y>` for two arrays of `n` signs in {-1, +1}.
//
// # Safety
// `x` and `y` must point to `n` readable bytes and `out_value` must be writable.
enum DpotStatus dpot_inner_product(const int8_t *x, const int8_t *y, size_t n, int64_t *out_value);

// `ceil((o + s) / (1000 ell))` for an offset `s` in `[1, 1000 ell]`.
//
// # Safety
// `out_value` must be writable.
enum DpotStatus dpot_bucket(int64_t o, int64_t s, uint64_t ell, int64_t *out_value);

// Parity of `bits & r`.
uint8_t dpot_gl(uint64_t bits, uint64_t r);

// `44 (alpha + p) <= 1 - q`, evaluated exactly on decimal strings.
//
// # Safety
// The three strings must be nul-terminated and `out_value` writable.
enum DpotStatus dpot_ot_feasible(const char *alpha, const char *p, const char *q, bool *out_value);

// One AWEC execution over `channel`, advancing `stream`. `k = 0` uses the derived value.
//
// # Safety
// `channel` and `stream` must be live handles and `out_result` writable.
enum DpotStatus dpot_run_awec(const struct DpotChannel *channel,
                              uint64_t ell,
                              double lambda1,
                              double lambda2,
                              size_t k,
                              struct DpotStream *stream,
                              struct DpotAwecResult *out_result);

// Full pipeline report as JSON, with the baseline adversaries and default lambdas.
// Release the string with [`dpot_string_free`].
//
// # Safety
// `channel` must be a live handle and `out_json` writable.
enum DpotStatus dpot_pipeline_json(const struct DpotChannel *channel,
                                   uint64_t ell,
                                   uint64_t trials,
                                   uint64_t seed,
                                   char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPOT_H */
