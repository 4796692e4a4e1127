#ifndef ORBITORSION_H
#define ORBITORSION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OrbiStatus {
  ORBI_STATUS_OK = 0,
  ORBI_STATUS_NULL_POINTER = 1,
  ORBI_STATUS_INVALID_UTF8 = 2,
  // malformed or inconsistent input (CLI exit code 2)
  ORBI_STATUS_VALIDATION = 3,
  // a computation failed or missed its tolerance (CLI exit code 3)
  ORBI_STATUS_NUMERICAL = 4,
  ORBI_STATUS_PANIC = 5,
} OrbiStatus;

typedef struct OrbiPresentation OrbiPresentation;

typedef struct OrbiRep OrbiRep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *orbi_last_error(void);

// Parses and validates a TOML presentation.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum OrbiStatus orbi_presentation_parse(const char *toml, struct OrbiPresentation **out);

// Loads a bundled example presentation by name, e.g. "pillowcase".
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum OrbiStatus orbi_presentation_corpus(const char *name, struct OrbiPresentation **out);

// # Safety
// `p` must be NULL or a handle from this library that was not freed yet.
void orbi_presentation_free(struct OrbiPresentation *p);

// Dimension n of the quotient, or 0 for a NULL handle.
//
// # Safety
// `p` must be NULL or a live handle.
uintptr_t orbi_presentation_dimension(const struct OrbiPresentation *p);

// Parses a JSON representation {rank, generators} and checks the relations.
//
// # Safety
// `p` must be a live handle, `json` a NUL-terminated string and `out` a
// valid pointer.
enum OrbiStatus orbi_rep_parse(const struct OrbiPresentation *p,
                               const char *json,
                               struct OrbiRep **out);

// Trivial representation of the given rank.
//
// # Safety
// `p` must be a live handle and `out` a valid pointer.
enum OrbiStatus orbi_rep_trivial(const struct OrbiPresentation *p,
                                 uintptr_t rank,
                                 struct OrbiRep **out);

// Bundled representation `rep` of corpus case `case_name`.
//
// # Safety
// `p` must be a live handle, the strings NUL-terminated and `out` valid.
enum OrbiStatus orbi_rep_corpus(const struct OrbiPresentation *p,
                                const char *case_name,
                                const char *rep,
                                struct OrbiRep **out);

// # Safety
// `r` must be NULL or a handle from this library that was not freed yet.
void orbi_rep_free(struct OrbiRep *r);

// χ_top(Z, F) from Betti numbers and whether it equals the strata sum.
//
// # Safety
// Handles must be live and the output pointers valid.
enum OrbiStatus orbi_euler_check(const struct OrbiPresentation *p,
                                 const struct OrbiRep *r,
                                 int64_t *chi_top,
                                 bool *pass);

// Analytic torsion T(F) of a flat or rank-one quotient.
//
// # Safety
// Handles must be live and `out` valid.
enum OrbiStatus orbi_torsion(const struct OrbiPresentation *p,
                             const struct OrbiRep *r,
                             double *out);

// log R_ρ(σ) from the closed-form product.
//
// # Safety
// Handles must be live and `out` valid.
enum OrbiStatus orbi_ruelle_log(const struct OrbiPresentation *p,
                                const struct OrbiRep *r,
                                double sigma,
                                double *out);

// Runs a named check ("euler-check", "torsion", "fried-check", ...) with
// default options and returns its JSON report. The string must be released
// with [`orbi_string_free`]. A check that runs but misses its tolerance
// still returns `Ok`; inspect `pass` in the report.
//
// # Safety
// Handles must be live, `check` NUL-terminated and `out` valid.
enum OrbiStatus orbi_check_json(const struct OrbiPresentation *p,
                                const struct OrbiRep *r,
                                const char *check,
                                char **out);

// # Safety
// `s` must be NULL or a string returned by this library.
void orbi_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORBITORSION_H */
