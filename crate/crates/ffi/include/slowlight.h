#ifndef SLOWLIGHT_H
#define SLOWLIGHT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_PARAMETER = 2,
  SL_STATUS_PRECONDITION = 3,
  SL_STATUS_NUMERICAL = 4,
  SL_STATUS_FIT_DIVERGENCE = 5,
  SL_STATUS_DATA = 6,
  SL_STATUS_IO = 7,
  SL_STATUS_OUT_OF_RANGE = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

typedef enum {
  SL_PARITY_EVEN = 0,
  SL_PARITY_ODD = 1,
  SL_PARITY_UNCLASSIFIED = 2,
} SlParity;

/**
 * Fitted fringes of one spectrum.
 */
typedef struct SlFringeAnalysis SlFringeAnalysis;

/**
 * Solved supercell bands with the bulk gap and guided-band tags.
 */
typedef struct SlWaveguide SlWaveguide;

/**
 * Waveguide geometry; lengths in nanometres.
 */
typedef struct {
  double a_nm;
  double r_nm;
  double d_nm;
  double n_bulk;
  double n_clad;
  uint32_t rows_per_side;
  double emitter_depth_nm;
} SlGeometry;

/**
 * Band-sweep settings. `n_eff <= 0` derives the background index from the
 * slab.
 */
typedef struct {
  uint32_t cutoff;
  uint32_t n_bands;
  uint32_t k_points;
  double k_min;
  double k_max;
  double n_eff;
} SlSolverParams;

typedef struct {
  double n_g;
  double s_eff_nm2;
  double wavelength_nm;
  double index;
  double orientation_factor;
  double depth_factor;
  double local_field_ratio;
} SlRateInputs;

typedef struct {
  double center_nm;
  double fwhm_nm;
  double amplitude;
  double center_sigma_nm;
  double fwhm_sigma_nm;
  double amplitude_sigma;
} SlPeak;

typedef struct {
  double tau_ns;
  double tau_sigma_ns;
  double amplitude;
  double offset;
  double window_start_ns;
  double window_end_ns;
  double reduced_chi2;
} SlDecayFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on this thread.
 */
const char *sl_last_error_message(void);

void sl_clear_error(void);

/**
 * The fabricated diamond device.
 */
SlGeometry sl_geometry_default(void);

SlSolverParams sl_solver_default(void);

/**
 * Runs the band sweep. On success `*out` owns a new handle.
 *
 * # Safety
 * Pointers must be NULL or valid for the access implied by their type.
 */
SlStatus sl_waveguide_solve(const SlGeometry *geometry,
                            const SlSolverParams *params,
                            SlWaveguide **out);

/**
 * # Safety
 * `handle` must be NULL or come from [`sl_waveguide_solve`], freed once.
 */
void sl_waveguide_free(SlWaveguide *handle);

/**
 * Number of k samples, 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live handle.
 */
size_t sl_waveguide_k_points(const SlWaveguide *handle);

/**
 * Number of tracked bands, 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live handle.
 */
size_t sl_waveguide_band_count(const SlWaveguide *handle);

/**
 * Normalized Bloch wavenumber `k a / 2 pi` of sample `k_index`.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_waveguide_k(const SlWaveguide *handle, size_t k_index, double *out);

/**
 * Frequency `a / lambda` of `band` at sample `k_index`.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_waveguide_frequency(const SlWaveguide *handle,
                                size_t band,
                                size_t k_index,
                                double *out);

/**
 * Mirror parity of a tracked band.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_waveguide_parity(const SlWaveguide *handle, size_t band, SlParity *out);

/**
 * Bulk gap edges in `a / lambda`; `SL_STATUS_DATA` when there is no gap.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_waveguide_gap(const SlWaveguide *handle, double *lo, double *hi);

/**
 * Index of the gap-guided band of the given parity.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_waveguide_guided_band(const SlWaveguide *handle, SlParity parity, size_t *out);

/**
 * Group index of `band` at `k_index` from the eigenvector; `INFINITY`
 * where the group velocity vanishes.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_waveguide_group_index(const SlWaveguide *handle,
                                  size_t band,
                                  size_t k_index,
                                  double *out);

/**
 * `(tau_off / tau_on - 1) / (debye_waller * branching_fraction)`.
 *
 * # Safety
 * `out` must be NULL or valid.
 */
SlStatus sl_f_zpl(double tau_off_ns,
                  double tau_on_ns,
                  double debye_waller,
                  double branching_fraction,
                  double *out);

/**
 * # Safety
 * `out` must be NULL or valid.
 */
SlStatus sl_beta_factor(double gamma_wg_per_ns, double gamma_phc_per_ns, double *out);

/**
 * `dipole` and `field` point to three doubles each.
 *
 * # Safety
 * Pointers must be NULL or valid for three reads.
 */
SlStatus sl_orientation_factor(const double *dipole, const double *field, double *out);

/**
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_depth_factor(const SlGeometry *geometry, double wavelength_nm, double *out);

/**
 * Waveguide emission rate relative to bulk.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_rate_enhancement(const SlRateInputs *inputs, double *out);

/**
 * Background subtraction, peak search and multi-Lorentzian fit of `n`
 * samples with default settings and the given waveguide length.
 *
 * # Safety
 * Arrays must hold `n` doubles; pointers must be NULL or valid.
 */
SlStatus sl_fringe_analyze(const double *wavelength_nm,
                           const double *counts,
                           size_t n,
                           double waveguide_length_nm,
                           SlFringeAnalysis **out);

/**
 * # Safety
 * `handle` must be NULL or come from [`sl_fringe_analyze`], freed once.
 */
void sl_fringe_free(SlFringeAnalysis *handle);

/**
 * # Safety
 * `handle` must be NULL or a live handle.
 */
size_t sl_fringe_peak_count(const SlFringeAnalysis *handle);

/**
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_fringe_peak(const SlFringeAnalysis *handle, size_t index, SlPeak *out);

/**
 * Group index between peaks `index` and `index + 1`.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
SlStatus sl_fringe_group_index(const SlFringeAnalysis *handle,
                               size_t index,
                               double *wavelength_nm,
                               double *n_g);

/**
 * Single-exponential fit from one bin past the maximum to the end.
 *
 * # Safety
 * Arrays must hold `n` doubles; pointers must be NULL or valid.
 */
SlStatus sl_fit_decay(const double *time_ns, const double *counts, size_t n, SlDecayFit *out);

/**
 * Zero-delay correlation from a pulsed histogram. `half_window_ns <= 0`
 * selects a quarter period.
 *
 * # Safety
 * Arrays must hold `n` doubles; pointers must be NULL or valid.
 */
SlStatus sl_g2_zero(const double *delay_ns,
                    const double *counts,
                    size_t n,
                    double rep_period_ns,
                    double half_window_ns,
                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLOWLIGHT_H */
