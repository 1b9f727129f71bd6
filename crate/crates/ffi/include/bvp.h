#ifndef BVP_H
#define BVP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BvpStatus {
  BVP_STATUS_OK = 0,
  BVP_STATUS_NULL_POINTER = 1,
  BVP_STATUS_INVALID_UTF8 = 2,
  // Input rejected: schema, parse, shape or range errors.
  BVP_STATUS_VALIDATION = 3,
  // A numerical step failed.
  BVP_STATUS_NUMERICAL = 4,
  // An index or buffer length is out of range.
  BVP_STATUS_OUT_OF_RANGE = 5,
  BVP_STATUS_PANIC = 6,
} BvpStatus;

typedef enum BvpClassification {
  BVP_CLASSIFICATION_UNIQUE = 0,
  BVP_CLASSIFICATION_UNDERDETERMINED = 1,
  BVP_CLASSIFICATION_UNSOLVABLE = 2,
} BvpClassification;

// A problem loaded from a scenario (the limit problem for a family).
typedef struct BvpProblem BvpProblem;

typedef struct BvpSolution BvpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next call into this library on the same thread.
const char *bvp_last_error(void);

// Library version as a static NUL-terminated string.
const char *bvp_version(void);

// Parses a JSON scenario. `grid_n = 0` keeps the scenario's grid.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum BvpStatus bvp_problem_from_json(const char *json, size_t grid_n, struct BvpProblem **out);

// # Safety
// `p` must come from [`bvp_problem_from_json`] and not be used afterwards.
void bvp_problem_free(struct BvpProblem *p);

// Number of grid nodes, `N + 1`; 0 for a null handle.
//
// # Safety
// `p` must be null or a live problem handle.
size_t bvp_problem_nodes(const struct BvpProblem *p);

// Writes `m`, `n` and `r` of the problem.
//
// # Safety
// All pointers must be valid.
enum BvpStatus bvp_problem_dims(const struct BvpProblem *p, size_t *m, size_t *n, size_t *r);

// Solves the problem. `rank_rtol <= 0` selects the default rank tolerance.
//
// # Safety
// `p` must be a live problem handle and `out` a valid pointer.
enum BvpStatus bvp_solve(const struct BvpProblem *p, double rank_rtol, struct BvpSolution **out);

// # Safety
// `s` must come from [`bvp_solve`] and not be used afterwards.
void bvp_solution_free(struct BvpSolution *s);

// Solvability class; `kernel_dim` and `residual` (least-squares residual of
// an unsolvable problem, 0 otherwise) may be null.
//
// # Safety
// `s` and `class` must be valid; the optional outputs null or valid.
enum BvpStatus bvp_solution_classification(const struct BvpSolution *s,
                                           enum BvpClassification *class_,
                                           size_t *kernel_dim,
                                           double *residual);

// Determinant of the characteristic matrix `[B Y]`.
//
// # Safety
// All pointers must be valid.
enum BvpStatus bvp_solution_det(const struct BvpSolution *s, double *re, double *im);

// `‖L y − f‖_{L_2}` and `|B y − c|` of the computed solution.
//
// # Safety
// All pointers must be valid.
enum BvpStatus bvp_solution_residuals(const struct BvpSolution *s,
                                      double *equation,
                                      double *boundary);

// Copies `y_component^{(derivative)}` at every node into `re` and `im`,
// each of length `len` (must equal the node count; `im` may be null).
//
// # Safety
// `re` must have room for `len` doubles, as must `im` when non-null.
enum BvpStatus bvp_solution_values(const struct BvpSolution *s,
                                   size_t derivative,
                                   size_t component,
                                   double *re,
                                   double *im,
                                   size_t len);

// `W_p^n` norm of a scalar function sampled at `len` uniform nodes of
// `[a, b]`. `p = INFINITY` selects the sup norm; `im` may be null.
//
// # Safety
// `re` (and `im` when non-null) must point to `len` doubles.
enum BvpStatus bvp_sobolev_norm(const double *re,
                                const double *im,
                                size_t len,
                                double a,
                                double b,
                                size_t n,
                                double p,
                                double *out);

// Runs the two-sided analysis of a family scenario and returns the report
// as JSON. Free the string with [`bvp_string_free`].
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum BvpStatus bvp_analyze_json(const char *json, size_t grid_n, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void bvp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BVP_H */
