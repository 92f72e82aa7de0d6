#ifndef CKVLAB_H
#define CKVLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CkvMode {
  CKV_MODE_CONFORMAL_KILLING = 0,
  CKV_MODE_KILLING = 1,
} CkvMode;

typedef enum CkvStatus {
  CKV_STATUS_OK = 0,
  CKV_STATUS_NULL_POINTER = 1,
  CKV_STATUS_INVALID_ARGUMENT = 2,
  CKV_STATUS_NUMERICAL = 3,
  CKV_STATUS_PANIC = 5,
} CkvStatus;

/**
 * A catalog metric on its default patch.
 */
typedef struct CkvMetric CkvMetric;

typedef struct CkvReport CkvReport;

typedef struct CkvTrial CkvTrial;

typedef struct CkvSolverConfig {
  enum CkvMode mode;
  /**
   * Maximal polynomial degree of the ansatz.
   */
  uint32_t degree;
  /**
   * Collocation points per axis.
   */
  size_t grid;
  double rel_tol;
  double gap_min;
} CkvSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread; do not free.
 */
const char *ckv_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void ckv_string_free(char *s);

/**
 * Library defaults: conformal mode, degree 3, 6 points per axis,
 * rel_tol 1e-8, gap_min 1e3.
 */
struct CkvSolverConfig ckv_solver_config_default(void);

/**
 * Catalog metric `label` (e.g. "flat", "sphere-stereo", "diag-poly:0.25") in
 * dimension `n`.
 *
 * # Safety
 * `label` must be a NUL-terminated string; `out` must be writable.
 */
enum CkvStatus ckv_metric_new(const char *label, size_t n, struct CkvMetric **out);

/**
 * # Safety
 * `m` must be NULL or a handle from [`ckv_metric_new`], not yet freed.
 */
void ckv_metric_free(struct CkvMetric *m);

/**
 * Dimension of the metric, 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live metric handle.
 */
size_t ckv_metric_dim(const struct CkvMetric *m);

/**
 * Patch bounds, `n` values each.
 *
 * # Safety
 * `m` must be a live metric handle; `lower` and `upper` must hold `len`
 * doubles.
 */
enum CkvStatus ckv_metric_patch(const struct CkvMetric *m,
                                double *lower,
                                double *upper,
                                size_t len);

/**
 * Metric components at `x` (length n), written row-major into `out`
 * (length n*n).
 *
 * # Safety
 * `m` must be a live metric handle; `x` and `out` must hold the given
 * lengths.
 */
enum CkvStatus ckv_metric_eval(const struct CkvMetric *m,
                               const double *x,
                               size_t x_len,
                               double *out,
                               size_t out_len);

/**
 * Numerical dimension of the (conformal) Killing fields of `m`.
 *
 * # Safety
 * `m` must be a live metric handle, `config` readable and `out` writable.
 */
enum CkvStatus ckv_count(const struct CkvMetric *m,
                         const struct CkvSolverConfig *config,
                         struct CkvReport **out);

/**
 * # Safety
 * `r` must be NULL or an owned report handle, not yet freed. Reports
 * borrowed from a trial must not be passed here.
 */
void ckv_report_free(struct CkvReport *r);

/**
 * # Safety
 * `r` must be NULL or a live report handle.
 */
size_t ckv_report_nullity(const struct CkvReport *r);

/**
 * Gap ratio; +infinity when there is no boundary to measure, NaN for NULL.
 *
 * # Safety
 * `r` must be NULL or a live report handle.
 */
double ckv_report_gap_ratio(const struct CkvReport *r);

/**
 * # Safety
 * `r` must be NULL or a live report handle.
 */
bool ckv_report_ambiguous(const struct CkvReport *r);

/**
 * Copies up to `cap` singular values (descending) into `out` and stores the
 * full count in `total`. `out` may be NULL when `cap` is 0.
 *
 * # Safety
 * `r` must be a live report handle, `out` must hold `cap` doubles and
 * `total` must be writable.
 */
enum CkvStatus ckv_report_singular_values(const struct CkvReport *r,
                                          double *out,
                                          size_t cap,
                                          size_t *total);

/**
 * Canonical JSON of the report; free with [`ckv_string_free`].
 *
 * # Safety
 * `r` must be a live report handle and `out` writable.
 */
enum CkvStatus ckv_report_to_json(const struct CkvReport *r, char **out);

/**
 * One seeded bump perturbation of `m` with amplitude `eps`. A perturbation
 * that breaks positive definiteness returns `CKV_STATUS_NUMERICAL`.
 *
 * # Safety
 * `m` must be a live metric handle, `config` readable and `out` writable.
 */
enum CkvStatus ckv_perturb_trial(const struct CkvMetric *m,
                                 const struct CkvSolverConfig *config,
                                 double eps,
                                 uint64_t seed,
                                 struct CkvTrial **out);

/**
 * Report of the unperturbed metric, owned by the trial.
 *
 * # Safety
 * `t` must be NULL or a live trial handle.
 */
const struct CkvReport *ckv_trial_before(const struct CkvTrial *t);

/**
 * Report of the perturbed metric, owned by the trial.
 *
 * # Safety
 * `t` must be NULL or a live trial handle.
 */
const struct CkvReport *ckv_trial_after(const struct CkvTrial *t);

/**
 * # Safety
 * `t` must be a live trial handle and `out` writable.
 */
enum CkvStatus ckv_trial_to_json(const struct CkvTrial *t, char **out);

/**
 * # Safety
 * `t` must be NULL or a trial handle, not yet freed.
 */
void ckv_trial_free(struct CkvTrial *t);

/**
 * Conformal-mode reports of `m` and of `m` rescaled by the catalog factor
 * `factor` ("const-2", "exp-x1", "sphere").
 *
 * # Safety
 * `m` must be a live metric handle, `factor` a NUL-terminated string,
 * `config` readable and both outputs writable.
 */
enum CkvStatus ckv_invariance_check(const struct CkvMetric *m,
                                    const char *factor,
                                    const struct CkvSolverConfig *config,
                                    struct CkvReport **out_base,
                                    struct CkvReport **out_scaled);

/**
 * Whether the jet parameter domain is strictly smaller than the metric jet
 * space at dimension `n` and order `k`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CkvStatus ckv_jet_sard_holds(uint64_t n, uint64_t k, bool *out);

/**
 * All jet dimensions at `(n, k)` as JSON, exact integers as decimal strings.
 *
 * # Safety
 * `out` must be writable.
 */
enum CkvStatus ckv_jet_record_json(uint64_t n, uint64_t k, char **out);

/**
 * Smooth bump of the given center and radius evaluated at `x`.
 *
 * # Safety
 * `center` and `x` must hold `n` doubles; `out` must be writable.
 */
enum CkvStatus ckv_bump(const double *center,
                        const double *x,
                        size_t n,
                        double radius,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CKVLAB_H */
