#ifndef GINIVAR_H
#define GINIVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GvStatus {
  GV_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or an index out of range.
  GV_STATUS_INVALID_ARGUMENT = 1,
  // Input or configuration rejected by the library.
  GV_STATUS_VALIDATION = 2,
  GV_STATUS_NUMERICAL = 3,
  GV_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  GV_STATUS_PANIC = 5,
} GvStatus;

typedef struct GvBands GvBands;

// Dataset together with the priors and sampler settings used to fit it.
typedef struct GvDataset GvDataset;

typedef struct GvDraws GvDraws;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call into this library from the same thread.
const char *gv_last_error(void);

// Library version as a static NUL-terminated string.
const char *gv_version(void);

// # Safety
// `out` must be a valid pointer to writable memory.
enum GvStatus gv_gini_from_sigma(double sigma, double *out);

// # Safety
// `out` must be a valid pointer to writable memory.
enum GvStatus gv_sigma_from_gini(double gini, double *out);

// # Safety
// `out` must be a valid pointer to writable memory.
enum GvStatus gv_lognormal_lorenz(double sigma, double p, double *out);

// Gini of grouped data from cumulative population shares and group means.
//
// # Safety
// `shares` and `means` must each point to `len` readable values.
enum GvStatus gv_grouped_gini(const double *shares, const double *means, size_t len, double *out);

// # Safety
// `values` must point to `len` readable values.
enum GvStatus gv_sample_gini(const double *values, size_t len, double *out);

// Closed-form and grouped Gini of `n_obs` simulated lognormal incomes.
//
// # Safety
// `true_gini` and `grouped_gini` must be valid writable pointers.
enum GvStatus gv_simulate_lorenz(double mu,
                                 double sigma,
                                 size_t n_obs,
                                 size_t n_groups,
                                 uint64_t seed,
                                 double *true_gini,
                                 double *grouped_gini);

// Loads income and macro data named by a JSON run configuration.
//
// # Safety
// `config_path` must be a NUL-terminated string and `out` a valid pointer.
enum GvStatus gv_dataset_load(const char *config_path, struct GvDataset **out);

// Built-in three-variable synthetic dataset with default priors and settings.
//
// # Safety
// `out` must be a valid pointer.
enum GvStatus gv_dataset_synthetic(uint64_t seed, struct GvDataset **out);

// # Safety
// `ds` must be null or a handle from this library.
size_t gv_dataset_periods(const struct GvDataset *ds);

// # Safety
// `ds` must be null or a handle from this library.
size_t gv_dataset_dim(const struct GvDataset *ds);

// # Safety
// `ds` must be null or a handle from this library, not used afterwards.
void gv_dataset_free(struct GvDataset *ds);

// Joint sampler. A zero `burn_in`, `draws` or `thin` keeps the dataset's setting.
//
// # Safety
// `ds` must be a handle from this library and `out` a valid pointer.
enum GvStatus gv_run_joint(const struct GvDataset *ds,
                           uint64_t seed,
                           size_t burn_in,
                           size_t draws,
                           size_t thin,
                           struct GvDraws **out);

// Two-step sampler with the log-variance path fixed at its static fits.
//
// # Safety
// `ds` must be a handle from this library and `out` a valid pointer.
enum GvStatus gv_run_twostep(const struct GvDataset *ds,
                             uint64_t seed,
                             size_t burn_in,
                             size_t draws,
                             size_t thin,
                             struct GvDraws **out);

// # Safety
// `dir` must be a NUL-terminated string and `out` a valid pointer.
enum GvStatus gv_draws_read(const char *dir, struct GvDraws **out);

// # Safety
// `draws` must be a handle from this library and `dir` a NUL-terminated string.
enum GvStatus gv_draws_write(const struct GvDraws *draws, const char *dir);

// # Safety
// `draws` must be null or a handle from this library.
size_t gv_draws_len(const struct GvDraws *draws);

// # Safety
// `draws` must be null or a handle from this library.
size_t gv_draws_dim(const struct GvDraws *draws);

// # Safety
// `draws` must be null or a handle from this library.
size_t gv_draws_periods(const struct GvDraws *draws);

// Copies the log-variance path of draw `index` into `buf`, which holds
// `len >= periods` values.
//
// # Safety
// `draws` must be a handle from this library; `buf` must hold `len` values.
enum GvStatus gv_draws_h(const struct GvDraws *draws, size_t index, double *buf, size_t len);

// Copies `mu_t` of draw `index` into `buf`.
//
// # Safety
// `draws` must be a handle from this library; `buf` must hold `len` values.
enum GvStatus gv_draws_mu(const struct GvDraws *draws, size_t index, double *buf, size_t len);

// Copies `beta = vec((alpha, B)')` of draw `index` into `buf`, which holds
// `len >= dim * (dim + 1)` values.
//
// # Safety
// `draws` must be a handle from this library; `buf` must hold `len` values.
enum GvStatus gv_draws_beta(const struct GvDraws *draws, size_t index, double *buf, size_t len);

// # Safety
// `draws` must be null or a handle from this library, not used afterwards.
void gv_draws_free(struct GvDraws *draws);

// Pointwise posterior IRF quantiles to a shock in `shock_variable`.
//
// `shutdown` is null or a comma-separated list of variables whose
// responses are switched off.
//
// # Safety
// `draws` must be a handle from this library, strings NUL-terminated,
// `quantiles` must hold `n_quantiles` values and `out` must be valid.
enum GvStatus gv_irf_bands(const struct GvDraws *draws,
                           const char *shock_variable,
                           size_t horizon,
                           double scale,
                           const double *quantiles,
                           size_t n_quantiles,
                           const char *shutdown,
                           struct GvBands **out);

// Band value for variable `var`, horizon `h` and quantile `q`.
//
// # Safety
// `bands` must be a handle from this library and `out` a valid pointer.
enum GvStatus gv_bands_value(const struct GvBands *bands,
                             size_t var,
                             size_t h,
                             size_t q,
                             double *out);

// Tidy CSV of the bands. Release the string with [`gv_string_free`].
//
// # Safety
// `bands` must be a handle from this library and `out` a valid pointer.
enum GvStatus gv_bands_csv(const struct GvBands *bands, char **out);

// # Safety
// `bands` must be null or a handle from this library, not used afterwards.
void gv_bands_free(struct GvBands *bands);

// # Safety
// `s` must be null or a string returned by this library, not used afterwards.
void gv_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GINIVAR_H */
