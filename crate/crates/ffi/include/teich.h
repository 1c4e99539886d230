#ifndef TEICH_H
#define TEICH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TeichStatus {
  TEICH_STATUS_OK = 0,
  TEICH_STATUS_NULL_POINTER = 1,
  TEICH_STATUS_INVALID_UTF8 = 2,
  TEICH_STATUS_PARSE_ERROR = 3,
  TEICH_STATUS_INVALID_INPUT = 4,
  TEICH_STATUS_NOT_SUPPORTED = 5,
  TEICH_STATUS_PANIC = 6,
} TeichStatus;

/*
 Opaque universal associator.
 */
typedef struct TeichAssociator TeichAssociator;

/*
 Opaque stable graph.
 */
typedef struct TeichGraph TeichGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *teich_last_error(void);

/*
 Releases a string returned by this library.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void teich_string_free(char *s);

/*
 Parses a graph from its JSON form.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TeichStatus teich_graph_from_json(const char *json, struct TeichGraph **out);

/*
 # Safety
 `g` must come from [`teich_graph_from_json`] and not be freed twice.
 */
void teich_graph_free(struct TeichGraph *g);

/*
 First Betti number of a connected graph.

 # Safety
 `g` must be a live handle; `out` must be writable.
 */
enum TeichStatus teich_graph_genus(const struct TeichGraph *g, uint32_t *out);

/*
 Type `(g, n)` of a stable graph.

 # Safety
 `g` must be a live handle; `genus` and `tails` must be writable.
 */
enum TeichStatus teich_graph_type(const struct TeichGraph *g, uint32_t *genus, uint32_t *tails);

/*
 Validation report as JSON; `*ok` is set to 1 when the graph is stable and
 well formed.

 # Safety
 `g` must be a live handle; `ok` and `report` must be writable.
 */
enum TeichStatus teich_graph_validate(const struct TeichGraph *g, int32_t *ok, char **report);

/*
 # Safety
 `g` must be a live handle; `out` must be writable.
 */
enum TeichStatus teich_graph_to_json(const struct TeichGraph *g, char **out);

/*
 Trivalent graphs of type `(g, n)` as a JSON array; `*count` receives
 their number.

 # Safety
 `count` and `out` must be writable.
 */
enum TeichStatus teich_enumerate_trivalent(uint32_t g, uint32_t n, size_t *count, char **out);

/*
 Multiple zeta value `zeta(s[0], .., s[len-1])`.

 # Safety
 `s` must point to `len` values; `out` must be writable.
 */
enum TeichStatus teich_mzv(const uint32_t *s, size_t len, double *out);

/*
 Universal associator to weight `weight` with default ODE settings.

 # Safety
 `out` must be writable.
 */
enum TeichStatus teich_associator_new(uint32_t weight, struct TeichAssociator **out);

/*
 # Safety
 `a` must come from [`teich_associator_new`] and not be freed twice.
 */
void teich_associator_free(struct TeichAssociator *a);

/*
 Coefficient of a word in the letters `a` and `b`, e.g. `"ab"`.

 # Safety
 `a` must be a live handle, `word` NUL-terminated, `out` writable.
 */
enum TeichStatus teich_associator_coefficient(const struct TeichAssociator *a,
                                              const char *word,
                                              double *out);

/*
 Connection matrix of an integer nilpotent pair `(A, B)`, both `n x n`
 row-major. Writes `2 n^2` doubles (real, imaginary interleaved) to `out`
 and the error estimate to `error`.

 # Safety
 `a`, `b` must hold `n*n` values, `out` room for `2*n*n`, `error` writable.
 */
enum TeichStatus teich_phi(size_t n,
                           const int64_t *a,
                           const int64_t *b,
                           double *out,
                           double *error);

/*
 Witt dimension for `r` letters in degree `k`, if it fits in 64 bits.

 # Safety
 `out` must be writable.
 */
enum TeichStatus teich_witt_dim(uint64_t r, uint64_t k, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEICH_H */
