/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PHASEPREDICT_H
#define PHASEPREDICT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum PpStatus {
  PP_STATUS_OK = 0,
  // A required pointer argument was null.
  PP_STATUS_NULL_POINTER = 1,
  // Malformed arguments or configuration (bad d, bad JSON, index out of range).
  PP_STATUS_INVALID_INPUT = 2,
  // g violates the admissibility condition (pole or determinant zero in the closed disk).
  PP_STATUS_NOT_ADMISSIBLE = 3,
  // A matrix that must be invertible was numerically singular.
  PP_STATUS_SINGULAR = 4,
  // An iteration did not converge or a truncation certificate could not be met.
  PP_STATUS_NON_CONVERGENCE = 5,
  // Internal failure, including a caught panic.
  PP_STATUS_INTERNAL = 6,
} PpStatus;

// Which matrix `pp_solution_matrix` returns.
typedef enum PpQuantity {
  // Forward prediction error covariance v_n.
  PP_QUANTITY_V = 0,
  // Backward prediction error covariance ṽ_n.
  PP_QUANTITY_V_TILDE = 1,
  // PACF α_n.
  PP_QUANTITY_ALPHA = 2,
  // φ_{n,j}, j = 1..n.
  PP_QUANTITY_PHI = 3,
  // φ̃_{n,j}, j = 1..n.
  PP_QUANTITY_PHI_TILDE = 4,
  // Covariance of the forward and backward order-n errors.
  PP_QUANTITY_CROSS_COV = 5,
} PpQuantity;

// A model with its engine settings.
typedef struct PpModel PpModel;

// Predictor solution at one horizon n.
typedef struct PpSolution PpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success. Valid until the next call.
const char *pp_last_error(void);

// Library version as a static NUL-terminated string.
const char *pp_version(void);

// Builds a model from a JSON configuration (fields d, g, and optionally tol, grid, window).
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum PpStatus pp_model_from_json(const char *json, struct PpModel **out);

// Scalar fractional noise with g ≡ 1.
//
// # Safety
// `out` must be a valid pointer.
enum PpStatus pp_model_fractional_noise(double d, struct PpModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from a constructor of this library and not be used afterwards.
void pp_model_free(struct PpModel *model);

// Dimension q of the process.
//
// # Safety
// `model` and `q` must be valid pointers.
enum PpStatus pp_model_dim(const struct PpModel *model, size_t *q);

// Innovation covariances v_∞ = c_0c_0* and ṽ_∞ = c̃_0c̃_0*, 2q² doubles each.
//
// # Safety
// `model` must be valid; `v_inf` and `v_tilde_inf` must each hold 2q² doubles.
enum PpStatus pp_model_limits(const struct PpModel *model, double *v_inf, double *v_tilde_inf);

// Solves the order-n prediction problem. With `with_coeffs` nonzero all φ_{n,j} and φ̃_{n,j} are
// computed as well; otherwise only v_n, ṽ_n and α_n are available.
//
// # Safety
// `model` and `out` must be valid pointers.
enum PpStatus pp_predict(const struct PpModel *model,
                         size_t n,
                         int32_t with_coeffs,
                         struct PpSolution **out);

// α_n for each of the `len` horizons in `ns`, written consecutively into `out` (len·2q² doubles).
//
// # Safety
// `model` must be valid, `ns` must hold `len` values and `out` len·2q² doubles.
enum PpStatus pp_pacf(const struct PpModel *model,
                      const size_t *ns,
                      size_t len,
                      double *out);

// Releases a solution; null is ignored.
//
// # Safety
// `sol` must come from `pp_predict` and not be used afterwards.
void pp_solution_free(struct PpSolution *sol);

// Horizon n of the solution.
//
// # Safety
// `sol` and `n` must be valid pointers.
enum PpStatus pp_solution_order(const struct PpSolution *sol, size_t *n);

// Copies one matrix of the solution into `out` (2q² doubles); `j` is used only for φ and φ̃.
//
// # Safety
// `sol` must be valid and `out` must hold 2q² doubles.
enum PpStatus pp_solution_matrix(const struct PpSolution *sol,
                                 enum PpQuantity quantity,
                                 size_t j,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEPREDICT_H */
