#ifndef HEATNET_H
#define HEATNET_H

/* Generated by cbindgen from heatnet-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum HnStatus {
  HnOk = 0,
  HnNullArgument = 1,
  HnInvalidUtf8 = 2,
  HnInvalidConfig = 3,
  HnSolverFailure = 4,
  HnUnstable = 5,
  HnBadLength = 6,
  HnNoTransport = 7,
  HnPanic = 8,
} HnStatus;

/**
 * Opaque model handle.
 */
typedef struct HnModel HnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hn_version(void);

/**
 * Last error message for the calling thread, or NULL when no error has
 * been recorded. The pointer stays valid until the next failing call on
 * the same thread.
 */
const char *hn_last_error(void);

/**
 * Build a model from a JSON document with the same schema as the CLI
 * configuration (the `model` and `baths` sections are required). Returns
 * NULL on error.
 *
 * # Safety
 * `json` must be a valid NUL-terminated C string.
 */
struct HnModel *hn_model_from_json(const char *json);

/**
 * Release a model handle. NULL is ignored.
 *
 * # Safety
 * `model` must be a pointer returned by [`hn_model_from_json`] that has
 * not been freed yet.
 */
void hn_model_free(struct HnModel *model);

/**
 * Number of baths of the model, or -1 on NULL.
 *
 * # Safety
 * `model` must be a live handle from [`hn_model_from_json`] or NULL.
 */
int32_t hn_model_n_baths(const struct HnModel *model);

/**
 * Number of network nodes, or -1 on NULL.
 *
 * # Safety
 * `model` must be a live handle from [`hn_model_from_json`] or NULL.
 */
int32_t hn_model_n_nodes(const struct HnModel *model);

/**
 * Steady-state currents of a static network. `out_heat` receives one value
 * per bath (length `len` must equal the bath count); `out_residual` gets
 * the first-law residual and may be NULL. Pass `rel_tol <= 0` for the
 * default quadrature tolerance.
 *
 * # Safety
 * `model` must be a live handle; `out_heat` must point to `len` writable
 * doubles; `out_residual` must be NULL or point to a writable double.
 */
enum HnStatus hn_static_currents(const struct HnModel *model,
                                 double rel_tol,
                                 double *out_heat,
                                 size_t len,
                                 double *out_residual);

/**
 * Period-averaged currents and work rates of a driven network.
 * `k_order <= 0` selects the default truncation with auto-escalation.
 * `out_heat` and `out_work_local` receive one value per bath; either may
 * be NULL to skip it. `out_work_total` may be NULL.
 *
 * # Safety
 * `model` must be a live handle; non-NULL output pointers must reference
 * `len` writable doubles (`out_work_total`: one double).
 */
enum HnStatus hn_averaged_currents(const struct HnModel *model,
                                   int32_t k_order,
                                   double rel_tol,
                                   double *out_heat,
                                   double *out_work_local,
                                   size_t len,
                                   double *out_work_total);

/**
 * Floquet stability heuristic for a driven model. `out_stable` receives 1
 * when both tiers pass, 0 otherwise.
 *
 * # Safety
 * `model` must be a live handle; non-NULL output pointers must each
 * reference one writable value.
 */
enum HnStatus hn_stability_check(const struct HnModel *model,
                                 int32_t *out_stable,
                                 double *out_worst_multiplier,
                                 double *out_worst_condition);

/**
 * Rectification coefficient R(q_fwd, q_rev) in [0, 2].
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum HnStatus hn_rectification(double q_fwd, double q_rev, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEATNET_H */
