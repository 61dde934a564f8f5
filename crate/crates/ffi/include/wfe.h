#ifndef WFE_H
#define WFE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WfeQuadrature {
  WFE_QUADRATURE_ANALYTIC = 0,
  /**
   * `param` is the node count per axis.
   */
  WFE_QUADRATURE_TENSOR_QUADRATURE = 1,
  /**
   * `param` is the sample count.
   */
  WFE_QUADRATURE_MONTE_CARLO = 2,
} WfeQuadrature;

typedef enum WfeStatus {
  WFE_STATUS_OK = 0,
  WFE_STATUS_DOMAIN = 1,
  WFE_STATUS_PARAMETER = 2,
  WFE_STATUS_SINGULAR_CONFIGURATION = 3,
  WFE_STATUS_NON_INTEGRABLE = 4,
  WFE_STATUS_SAMPLING = 5,
  WFE_STATUS_SPLIT_CONDITION = 6,
  WFE_STATUS_INFEASIBLE = 7,
  WFE_STATUS_SINGULAR = 8,
  WFE_STATUS_DEGENERATE = 9,
  WFE_STATUS_SHAPE = 10,
  WFE_STATUS_NOT_POSITIVE_DEFINITE = 11,
  WFE_STATUS_CONFIG = 12,
  WFE_STATUS_IO = 13,
  WFE_STATUS_NULL_POINTER = 14,
  WFE_STATUS_PANIC = 15,
} WfeStatus;

/**
 * Opaque block Jacobian.
 */
typedef struct WfeJacobian WfeJacobian;

/**
 * Opaque pair potential.
 */
typedef struct WfePotential WfePotential;

/**
 * Opaque test state.
 */
typedef struct WfeState WfeState;

typedef struct WfeBound {
  /**
   * 1-based direction of the best bound.
   */
  size_t mu;
  double numerator_kinetic;
  double numerator_potential;
  double denominator;
  /**
   * NaN when `unbounded`.
   */
  double lambda_lb;
  bool unbounded;
  /**
   * NaN unless sampled.
   */
  double pair_std_error;
} WfeBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t wfe_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum WfeStatus wfe_potential_lennard_jones(double energy, double length, struct WfePotential **out);

/**
 * Lennard-Jones with the core flattened below `length / 2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WfeStatus wfe_potential_capped_lj(double energy, double length, struct WfePotential **out);

/**
 * Square-well potential; a NaN `smoothing` keeps sharp steps.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WfeStatus wfe_potential_basuev(double height,
                                    double radius,
                                    double width,
                                    double smoothing,
                                    struct WfePotential **out);

/**
 * # Safety
 * `p` must be null or a handle from a `wfe_potential_*` constructor, freed once.
 */
void wfe_potential_free(struct WfePotential *p);

/**
 * # Safety
 * `p` must be a live handle and `value` a valid pointer.
 */
enum WfeStatus wfe_potential_eval(const struct WfePotential *p, double r, double *value);

/**
 * `U = sum_{j != k} u(|x_j - x_k|)` for `n_bodies` positions stored as `x, y, z` triples.
 *
 * # Safety
 * `positions` must hold `3 * n_bodies` values; `p` live; `value` valid.
 */
enum WfeStatus wfe_total_u(const struct WfePotential *p,
                           const double *positions,
                           size_t n_bodies,
                           double *value);

/**
 * Lower estimate of `eps_U` from clusters of up to `n_max` bodies.
 *
 * # Safety
 * `p` live; `value` valid.
 */
enum WfeStatus wfe_stability_estimate(const struct WfePotential *p,
                                      size_t n_max,
                                      size_t restarts,
                                      uint64_t seed,
                                      double *value);

/**
 * Gaussian lattice state on a cubic raster.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WfeStatus wfe_state_lattice(size_t n_bodies,
                                 double spacing,
                                 double sigma,
                                 bool center,
                                 struct WfeState **out);

/**
 * Superposition of the centred lattice translated by `-/+ shift` along 1-based `direction`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WfeStatus wfe_state_superposition(size_t n_bodies,
                                       double spacing,
                                       double sigma,
                                       double shift,
                                       size_t direction,
                                       double phase,
                                       struct WfeState **out);

/**
 * # Safety
 * `s` must be null or a handle from a `wfe_state_*` constructor, freed once.
 */
void wfe_state_free(struct WfeState *s);

/**
 * `S` (three values), squared norm and imaginary-part weight.
 *
 * # Safety
 * `s` live; `s_out` holds 3 values; other pointers valid.
 */
enum WfeStatus wfe_state_moments(const struct WfeState *s,
                                 double *s_out,
                                 double *norm_sq,
                                 double *im_weight);

/**
 * Variational lower bound; `potential` may be null for `U = 0`.
 *
 * # Safety
 * `state` live; `potential` null or live; `result` valid.
 */
enum WfeStatus wfe_lambda_lower_bound(const struct WfeState *state,
                                      double mass,
                                      double trap,
                                      const struct WfePotential *potential,
                                      enum WfeQuadrature method,
                                      size_t param,
                                      uint64_t seed,
                                      struct WfeBound *result);

/**
 * Criterion (i): `3 omega / 2 > eps_U`, with the spectral lower bound of `Lambda`.
 *
 * # Safety
 * `pass` and `lower` must be valid pointers.
 */
enum WfeStatus wfe_check_i(size_t n_bodies,
                           double mass,
                           double trap,
                           double eps_u,
                           bool *pass,
                           double *lower);

/**
 * Criterion (iv) coupling ceiling for a real state with `|S|^2 = s_norm_sq`.
 *
 * # Safety
 * `w_max` must be a valid pointer.
 */
enum WfeStatus wfe_w_upper_bound_iv(size_t n_bodies,
                                    double mass,
                                    double trap,
                                    double eps_u,
                                    double rho,
                                    double s_norm_sq,
                                    double delta,
                                    double *w_max);

/**
 * `det(R + xi eta^t)` for an `n x n` matrix `r`.
 *
 * # Safety
 * `r` holds `n * n` values, `xi` and `eta` hold `n`; `value` valid.
 */
enum WfeStatus wfe_det_ipr1(const double *r,
                            size_t n,
                            const double *xi,
                            const double *eta,
                            double *value);

/**
 * `det(R + xi1 eta1^t + xi2 eta2^t)`.
 *
 * # Safety
 * `r` holds `n * n` values and each vector `n`; `value` valid.
 */
enum WfeStatus wfe_det_ipr2(const double *r,
                            size_t n,
                            const double *xi1,
                            const double *eta1,
                            const double *xi2,
                            const double *eta2,
                            double *value);

/**
 * `det(I + P Q)` and `det(I + Q P)` for `P: rows x cols`, `Q: cols x rows`.
 *
 * # Safety
 * `p` and `q` hold `rows * cols` values; `lhs`, `rhs` valid.
 */
enum WfeStatus wfe_sylvester_det(const double *p,
                                 const double *q,
                                 size_t rows,
                                 size_t cols,
                                 double *lhs,
                                 double *rhs);

/**
 * Jacobian from explicit blocks: `E` is `n x n`, the six vectors have length `n`.
 *
 * # Safety
 * Array sizes as stated; `out` valid.
 */
enum WfeStatus wfe_jacobian_new(const double *e,
                                size_t n,
                                const double *u,
                                const double *v,
                                const double *a1,
                                const double *a2,
                                const double *d1,
                                const double *d2,
                                struct WfeJacobian **out);

/**
 * Lattice Jacobian with the default dyad vectors and `S = 0`; `potential` may be null.
 *
 * # Safety
 * `potential` null or live; `out` valid.
 */
enum WfeStatus wfe_jacobian_discretize(size_t n_grid,
                                       double box_len,
                                       size_t bodies,
                                       size_t dim,
                                       double mass,
                                       double trap,
                                       double coupling,
                                       const struct WfePotential *potential,
                                       struct WfeJacobian **out);

/**
 * # Safety
 * `j` must be null or a handle from a `wfe_jacobian_*` constructor, freed once.
 */
void wfe_jacobian_free(struct WfeJacobian *j);

/**
 * Block size `n` of the Jacobian.
 *
 * # Safety
 * `j` live; `dim` valid.
 */
enum WfeStatus wfe_jacobian_dim(const struct WfeJacobian *j, size_t *dim);

/**
 * `F(lambda)` and `G(lambda)` with `det(M - lambda I) = F G`.
 *
 * # Safety
 * `j` live; `f`, `g` valid.
 */
enum WfeStatus wfe_jacobian_char_poly(const struct WfeJacobian *j,
                                      double lambda,
                                      double *f,
                                      double *g);

/**
 * First zero of `G` on `(0, lambda_star)`. Nonpositive `lambda_star`, `step`
 * or `tol` select the defaults. `found` is false when no zero is certified.
 *
 * # Safety
 * `j` live; `found`, `lambda` valid.
 */
enum WfeStatus wfe_jacobian_first_zero(const struct WfeJacobian *j,
                                       double lambda_star,
                                       double step,
                                       double tol,
                                       bool *found,
                                       double *lambda);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WFE_H */
