/*
 * C interface to the pathprop path-integral engine.
 *
 * Fallible functions return a PpStatus. On failure, pp_last_error_message()
 * describes the error on the calling thread. Handles are created by the
 * *_new / builder functions and released with the matching *_free.
 */

#ifndef PATHPROP_H
#define PATHPROP_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PpStatus {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_ARGUMENT = 2,
  PP_STATUS_GRID_MISMATCH = 3,
  /**
   * Non-finite values, norm decay or another numerical breakdown.
   */
  PP_STATUS_NUMERIC = 4,
  PP_STATUS_NO_TUNNEL_EVENT = 5,
  PP_STATUS_IO = 6,
  /**
   * The caller's buffer is too short; the required length was written.
   */
  PP_STATUS_BUFFER_TOO_SMALL = 7,
  PP_STATUS_PANIC = 8,
} PpStatus;

typedef enum PpObservable {
  PP_OBSERVABLE_POSITION = 0,
  PP_OBSERVABLE_KINETIC = 1,
  PP_OBSERVABLE_POTENTIAL = 2,
  PP_OBSERVABLE_HAMILTONIAN = 3,
} PpObservable;

typedef struct PpGrid PpGrid;

typedef struct PpModel PpModel;

typedef struct PpPropagator PpPropagator;

typedef struct PpWavefunction PpWavefunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call into the library.
 */
const char *pp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pp_version(void);

/**
 * Threads used for matrix products; 0 restores the default.
 */
enum PpStatus pp_set_threads(size_t threads);

enum PpStatus pp_grid_new(double x_min, double x_max, size_t intervals, struct PpGrid **out);

void pp_grid_free(struct PpGrid *grid);

/**
 * Number of grid points, `intervals + 1`.
 */
enum PpStatus pp_grid_len(const struct PpGrid *grid, size_t *out);

enum PpStatus pp_grid_dx(const struct PpGrid *grid, double *out);

/**
 * Copies the grid points into `out[0..len]`.
 */
enum PpStatus pp_grid_points(const struct PpGrid *grid, double *out, size_t len);

enum PpStatus pp_model_harmonic(struct PpModel **out);

/**
 * `V(x) = alpha (x^2 - x_min^2)^2`.
 */
enum PpStatus pp_model_double_well(double alpha, double x_min, struct PpModel **out);

/**
 * `V(x) = sum_k coeffs[k] x^k`.
 */
enum PpStatus pp_model_custom(const double *coeffs, size_t len, double mass, struct PpModel **out);

void pp_model_free(struct PpModel *model);

enum PpStatus pp_model_potential(const struct PpModel *model, double x, double *out);

/**
 * `G(T)` from `slices` short-time kernels of width `block_time / slices`.
 * `slices` must be a power of two.
 */
enum PpStatus pp_propagator_compose(const struct PpModel *model,
                                    const struct PpGrid *grid,
                                    double block_time,
                                    size_t slices,
                                    struct PpPropagator **out);

/**
 * Closed-form harmonic oscillator propagator sampled on the grid.
 */
enum PpStatus pp_propagator_harmonic_exact(const struct PpGrid *grid,
                                           double t,
                                           struct PpPropagator **out);

/**
 * `G(t_block + t_prev) = G(t_block) G(t_prev) dx`.
 */
enum PpStatus pp_propagator_extend(const struct PpPropagator *block,
                                   const struct PpPropagator *prev,
                                   struct PpPropagator **out);

/**
 * Rescales `g` in place so its mean norm profile is 1.
 */
enum PpStatus pp_propagator_renormalize(struct PpPropagator *g);

void pp_propagator_free(struct PpPropagator *g);

/**
 * Number of grid points (rows) of `g`.
 */
enum PpStatus pp_propagator_dim(const struct PpPropagator *g, size_t *out);

enum PpStatus pp_propagator_elapsed(const struct PpPropagator *g, double *out);

/**
 * Copies the entries row-major as interleaved (re, im) pairs into
 * `out[0..len]`; `len` must be at least `2 * dim * dim`.
 */
enum PpStatus pp_propagator_entries(const struct PpPropagator *g, double *out, size_t len);

/**
 * `dx * sum_k G_kk`.
 */
enum PpStatus pp_propagator_trace(const struct PpPropagator *g, double *re, double *im);

/**
 * Per-start-point norm profile, one value per grid point.
 */
enum PpStatus pp_propagator_norm_profile(const struct PpPropagator *g, double *out, size_t len);

/**
 * Writes the binary dump (32-byte little-endian header, then entries).
 */
enum PpStatus pp_propagator_save(const struct PpPropagator *g, const char *file);

enum PpStatus pp_propagator_load(const char *file, struct PpPropagator **out);

/**
 * Normalized Gaussian `exp(-alpha (x - x_start)^2 / 2)`.
 */
enum PpStatus pp_wavefunction_gaussian(const struct PpGrid *grid,
                                       double alpha,
                                       double x_start,
                                       struct PpWavefunction **out);

/**
 * Builds a state from interleaved (re, im) amplitudes, `len = 2 * points`,
 * and normalizes it.
 */
enum PpStatus pp_wavefunction_from_amplitudes(const struct PpGrid *grid,
                                              const double *amplitudes,
                                              size_t len,
                                              struct PpWavefunction **out);

void pp_wavefunction_free(struct PpWavefunction *psi);

/**
 * `psi' = dx G psi`, without renormalization.
 */
enum PpStatus pp_wavefunction_apply(const struct PpPropagator *g,
                                    const struct PpWavefunction *psi,
                                    struct PpWavefunction **out);

/**
 * Discrete norm `dx sum |psi|^2`.
 */
enum PpStatus pp_wavefunction_norm(const struct PpWavefunction *psi, double *out);

/**
 * Interleaved (re, im) amplitudes into `out[0..len]`, `len >= 2 * points`.
 */
enum PpStatus pp_wavefunction_amplitudes(const struct PpWavefunction *psi, double *out, size_t len);

/**
 * Norm-insensitive expectation value. `model` supplies `V` and the mass.
 */
enum PpStatus pp_wavefunction_expectation(const struct PpWavefunction *psi,
                                          const struct PpModel *model,
                                          enum PpObservable observable,
                                          double *out);

/**
 * `Tr G(t_i)` for `t_i = (i + 1) T`, `i = 0..=n_blocks`, as interleaved
 * (re, im) pairs; `len >= 2 * (n_blocks + 1)`.
 */
enum PpStatus pp_trace_ladder(const struct PpPropagator *block,
                              size_t n_blocks,
                              bool renormalize_each,
                              double *out,
                              size_t len);

/**
 * Energy peaks of an interleaved trace sampled every `block_time`.
 * `count` receives the number of peaks; if it exceeds `capacity`, nothing
 * is copied and `PP_STATUS_BUFFER_TOO_SMALL` is returned.
 */
enum PpStatus pp_spectrum_peaks(const double *trace,
                                size_t samples,
                                double block_time,
                                double threshold_fraction,
                                double *energies,
                                size_t capacity,
                                size_t *count);

/**
 * `pi / (e_a - e_s)`.
 */
enum PpStatus pp_tunnel_time_splitting(double e_s, double e_a, double *out);

/**
 * First sign-reversed extremum of a uniformly sampled `<x>(t)`.
 */
enum PpStatus pp_tunnel_time_dynamic(const double *times,
                                     const double *values,
                                     size_t len,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHPROP_H */
