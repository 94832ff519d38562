#ifndef ANOKAT_H
#define ANOKAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum AnokatStatus {
  ANOKAT_STATUS_OK = 0,
  ANOKAT_STATUS_NULL_POINTER = 1,
  ANOKAT_STATUS_INVALID_ARGUMENT = 2,
  ANOKAT_STATUS_SIZE_CAP = 3,
  ANOKAT_STATUS_SEAM_HIT = 4,
  ANOKAT_STATUS_NON_CONVERGENCE = 5,
  ANOKAT_STATUS_CONFIG = 6,
  ANOKAT_STATUS_STEP_REJECTED = 7,
  ANOKAT_STATUS_IO = 8,
  ANOKAT_STATUS_INTERNAL = 9,
} AnokatStatus;

// Surface selector: cylinder, sphere or disk.
typedef enum AnokatSurface {
  ANOKAT_SURFACE_CYLINDER = 0,
  ANOKAT_SURFACE_SPHERE = 1,
  ANOKAT_SURFACE_DISK = 2,
} AnokatSurface;

// Opaque area-preserving map.
typedef struct AnokatMap AnokatMap;

// Opaque finite measure on a surface.
typedef struct AnokatMeasure AnokatMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, or 0 when none.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
size_t anokat_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *anokat_version(void);

// Releases a string returned by the library.
//
// # Safety
// `s` must come from this library and not have been freed.
void anokat_string_free(char *s);

// Builds a measure from `n` atoms `(theta[i], y[i])` with weights `w[i]`,
// normalised to total mass 1.
//
// # Safety
// The three arrays must hold `n` values each; `out` must be writable.
enum AnokatStatus anokat_measure_new(enum AnokatSurface surface,
                                     const double *theta,
                                     const double *y,
                                     const double *w,
                                     size_t n,
                                     struct AnokatMeasure **out);

// The stratified longitude measure `μ_y` with `m` atoms.
//
// # Safety
// `out` must be writable.
enum AnokatStatus anokat_measure_longitude(enum AnokatSurface surface,
                                           double y,
                                           size_t m,
                                           struct AnokatMeasure **out);

// The stratified Lebesgue measure on an `m_theta × m_y` grid.
//
// # Safety
// `out` must be writable.
enum AnokatStatus anokat_measure_leb(enum AnokatSurface surface,
                                     size_t m_theta,
                                     size_t m_y,
                                     struct AnokatMeasure **out);

// Number of atoms, or 0 for a null handle.
//
// # Safety
// `m` must be a live handle or null.
size_t anokat_measure_len(const struct AnokatMeasure *m);

// # Safety
// `m` must come from this library and not have been freed.
void anokat_measure_free(struct AnokatMeasure *m);

// Exact Kantorovich distance between two measures on the same surface.
//
// # Safety
// Handles must be live; `out` must be writable.
enum AnokatStatus anokat_w1(const struct AnokatMeasure *mu,
                            const struct AnokatMeasure *nu,
                            double *out);

// Distance from `mu` to the hull of Leb (on an `leb_theta × leb_y` grid) and
// the two boundary measures (with `ref_atoms` atoms each).
//
// # Safety
// `mu` must be live; `out` must be writable.
enum AnokatStatus anokat_dist_to_hull(const struct AnokatMeasure *mu,
                                      size_t leb_theta,
                                      size_t leb_y,
                                      size_t ref_atoms,
                                      double *out);

// The identity map.
//
// # Safety
// `out` must be writable.
enum AnokatStatus anokat_map_identity(struct AnokatMap **out);

// Rotation by the exact rational `p/q`.
//
// # Safety
// `out` must be writable.
enum AnokatStatus anokat_map_rotation(int64_t p, int64_t q, struct AnokatMap **out);

// The box shuffle commuting with `R_{1/q}` at scale `eps`, default schedule.
//
// # Safety
// `out` must be writable.
enum AnokatStatus anokat_map_box_shuffle(uint64_t q, double eps, struct AnokatMap **out);

// `outer ∘ inner`. Both inputs stay owned by the caller.
//
// # Safety
// Handles must be live; `out` must be writable.
enum AnokatStatus anokat_map_compose(const struct AnokatMap *outer,
                                     const struct AnokatMap *inner,
                                     struct AnokatMap **out);

// The inverse map.
//
// # Safety
// `m` must be live; `out` must be writable.
enum AnokatStatus anokat_map_inverse(const struct AnokatMap *m, struct AnokatMap **out);

// Image of the point `(theta, y)`.
//
// # Safety
// `m` must be live; the outputs must be writable.
enum AnokatStatus anokat_map_eval(const struct AnokatMap *m,
                                  enum AnokatSurface surface,
                                  double theta,
                                  double y,
                                  double *out_theta,
                                  double *out_y);

// Atomwise pushforward of `mu`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum AnokatStatus anokat_map_pushforward(const struct AnokatMap *m,
                                         const struct AnokatMeasure *mu,
                                         struct AnokatMeasure **out);

// # Safety
// `m` must come from this library and not have been freed.
void anokat_map_free(struct AnokatMap *m);

// Runs a scheme from a JSON config and returns the ledger as JSON in
// `out_ledger` (release with [`anokat_string_free`]). A rejected stage yields
// `StepRejected` and still fills `out_ledger` with the ledger so far.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_ledger` must be writable.
enum AnokatStatus anokat_scheme_run(const char *config_json, char **out_ledger);

// Runs a verification suite by name with default options and `trials`
// (0 keeps the suite default). Writes 1 to `out_passed` iff it passed.
//
// # Safety
// `suite` must be a NUL-terminated string; `out_passed` must be writable.
enum AnokatStatus anokat_verify(const char *suite, size_t trials, int32_t *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANOKAT_H */
