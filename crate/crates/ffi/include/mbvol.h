#ifndef MBVOL_H
#define MBVOL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MbvStatus {
  MBV_STATUS_OK = 0,
  MBV_STATUS_NULL_POINTER = 1,
  MBV_STATUS_DOMAIN = 2,
  MBV_STATUS_CONFIG = 3,
  MBV_STATUS_INDEX = 4,
  MBV_STATUS_UNDEFINED_STATISTIC = 5,
  MBV_STATUS_LOAD = 6,
  MBV_STATUS_IO = 7,
  MBV_STATUS_PANIC = 8,
} MbvStatus;

typedef enum MbvModel {
  // Stochastic volatility with the default parameters.
  MBV_MODEL_SV = 0,
  // `dX = μ dt + dW`.
  MBV_MODEL_CONSTANT_VOL = 1,
} MbvModel;

typedef enum MbvEstimator {
  MBV_ESTIMATOR_MRV = 0,
  MBV_ESTIMATOR_MRQ = 1,
  MBV_ESTIMATOR_MBV_ROBUST = 2,
  MBV_ESTIMATOR_MTQ = 3,
} MbvEstimator;

// Block averages of one series under one block scheme.
typedef struct MbvAnalysis MbvAnalysis;

// Noisy observations `y_0..y_n`.
typedef struct MbvObservations MbvObservations;

typedef struct MbvSimulation {
  double iv;
  double iq;
} MbvSimulation;

typedef struct MbvScheme {
  size_t n;
  size_t k;
  size_t m;
  size_t l;
  double c1_eff;
  double c2_eff;
  double gamma;
} MbvScheme;

typedef struct MbvEstimate {
  double value;
  // False for estimators without a feasible variance; the variance and
  // interval fields are then NaN.
  bool has_variance;
  double variance;
  double ci_low;
  double ci_high;
  double omega2_hat;
} MbvEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *mbv_last_error_message(void);

// Copies `len = n + 1` observed values into a new handle.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum MbvStatus mbv_observations_new(const double *values, size_t len, struct MbvObservations **out);

// Simulates one path on `n` intervals, adds N(0, omega2) noise and
// `jump_count` jumps of standard deviation `h`. Same seeding as the
// `simulate` subcommand.
//
// # Safety
// `out` must be writable; `truth` may be NULL.
enum MbvStatus mbv_simulate(enum MbvModel model,
                            size_t n,
                            double omega2,
                            size_t jump_count,
                            double h,
                            uint64_t seed,
                            struct MbvObservations **out,
                            struct MbvSimulation *truth);

// Number of values `n + 1`.
//
// # Safety
// `obs` must be a live handle or NULL.
enum MbvStatus mbv_observations_len(const struct MbvObservations *obs, size_t *out);

// Copies up to `capacity` values into `buffer`.
//
// # Safety
// `obs` must be a live handle; `buffer` must hold `capacity` doubles.
enum MbvStatus mbv_observations_values(const struct MbvObservations *obs,
                                       double *buffer,
                                       size_t capacity);

// # Safety
// `obs` must come from this library and not be used afterwards.
void mbv_observations_free(struct MbvObservations *obs);

// Builds the block averages for tuning `(c1, c2)`. `gamma <= 0` selects
// the balanced scheme, `0 < gamma < 1/2` the gamma scheme.
//
// # Safety
// `obs` must be a live handle; `out` must be writable.
enum MbvStatus mbv_analysis_new(const struct MbvObservations *obs,
                                double c1,
                                double c2,
                                double gamma,
                                bool finite_sample_nu1,
                                struct MbvAnalysis **out);

// # Safety
// `analysis` must come from this library and not be used afterwards.
void mbv_analysis_free(struct MbvAnalysis *analysis);

// # Safety
// `analysis` must be a live handle; `out` must be writable.
enum MbvStatus mbv_analysis_scheme(const struct MbvAnalysis *analysis, struct MbvScheme *out);

// Bias-corrected estimate. When the estimator has a feasible variance, the
// two-sided interval at `level` (in `[0, 1)`) is filled in.
//
// # Safety
// `analysis` must be a live handle; `out` must be writable.
enum MbvStatus mbv_analysis_estimate(const struct MbvAnalysis *analysis,
                                     enum MbvEstimator estimator,
                                     double level,
                                     struct MbvEstimate *out);

// Raw multipower statistic over `count` consecutive blocks, normalised for
// the scheme the analysis was built with.
//
// # Safety
// `powers` must point to `count` doubles; `out` must be writable.
enum MbvStatus mbv_analysis_multipower(const struct MbvAnalysis *analysis,
                                       const double *powers,
                                       size_t count,
                                       double *out);

// Studentized MRV error against a known integrated variance.
//
// # Safety
// `analysis` must be a live handle; `out` must be writable.
enum MbvStatus mbv_analysis_standardized(const struct MbvAnalysis *analysis,
                                         double iv,
                                         bool log_form,
                                         double *out);

// `E|N(0,1)|^r`.
//
// # Safety
// `out` must be writable.
enum MbvStatus mbv_abs_moment(double r, double *out);

// # Safety
// `nu1` and `nu2` must be writable.
enum MbvStatus mbv_bias_constants(double c1, double c2, double *nu1, double *nu2);

// # Safety
// `out` must be writable.
enum MbvStatus mbv_finite_sample_nu1(size_t n, double c1, double c2, double *out);

// # Safety
// `powers` must point to `count` doubles; `out` must be writable.
enum MbvStatus mbv_clt_constant(const double *powers, size_t count, double *out);

// Variance-optimal `(c1, c2)` for constant volatility `sigma` and noise
// standard deviation `omega`.
//
// # Safety
// All out pointers must be writable.
enum MbvStatus mbv_optimal_constants(double omega,
                                     double sigma,
                                     double *c1,
                                     double *c2,
                                     double *min_variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MBVOL_H */
