#ifndef BEC_SWEEP_H
#define BEC_SWEEP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BecStatus {
  BEC_STATUS_OK = 0,
  BEC_STATUS_NULL_POINTER = 1,
  BEC_STATUS_INVALID_ARGUMENT = 2,
  BEC_STATUS_CAPACITY = 3,
  BEC_STATUS_NUMERICAL = 4,
  BEC_STATUS_IO = 5,
  BEC_STATUS_BUFFER_TOO_SMALL = 6,
  BEC_STATUS_PANIC = 7,
} BecStatus;

typedef struct BecCatState BecCatState;

typedef struct BecDistribution BecDistribution;

typedef struct BecSector BecSector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread as a NUL-terminated string.
//
// Returns the message length excluding the terminator. Nothing is written
// when `buf` is null or `len` is too small to hold the message.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t bec_last_error_message(char *buf, size_t len);

// Creates a sector with `channels` reaction channels.
//
// # Safety
// `q` and `eps` must point to `channels` values; `out_sector` must be writable.
enum BecStatus bec_sector_new(uint32_t n_total,
                              const uint32_t *q,
                              const double *eps,
                              size_t channels,
                              double g,
                              double beta,
                              double tau,
                              struct BecSector **out_sector);

// # Safety
// `sector` must be null or a handle from [`bec_sector_new`] not yet freed.
void bec_sector_free(struct BecSector *sector);

// Number of basis states in the sector.
//
// # Safety
// `sector` must be a live handle.
enum BecStatus bec_sector_dim(const struct BecSector *sector, size_t *out_dim);

// Occupations of basis state `index`: molecule number and `channels` pair numbers.
//
// # Safety
// `sector` must be a live handle; `out_m` must hold `channels` values.
enum BecStatus bec_sector_state(const struct BecSector *sector,
                                size_t index,
                                uint32_t *out_n,
                                uint32_t *out_m,
                                size_t channels);

// Largest relative commutator residual and the integrability derivative residual.
//
// # Safety
// `times` must point to `count` values; the out-pointers must be writable.
enum BecStatus bec_sector_integrability(const struct BecSector *sector,
                                        const double *times,
                                        size_t count,
                                        double *out_commutator,
                                        double *out_derivative);

// Propagates from basis state `initial` over `[−half_width, half_width]` and
// writes the final occupation probabilities in basis order.
//
// # Safety
// `sector` must be a live handle; `out_probs` must hold `len` values.
enum BecStatus bec_sector_transition(const struct BecSector *sector,
                                     size_t initial,
                                     double half_width,
                                     double resolution,
                                     double *out_probs,
                                     size_t len);

// Pairs formed from `n_total` molecules in one dissociating sweep.
//
// # Safety
// `out_dist` must be writable.
enum BecStatus bec_reverse_distribution(uint32_t n_total,
                                        uint32_t q,
                                        double x,
                                        struct BecDistribution **out_dist);

// Molecules formed from `n_total` atom pairs in one associating sweep.
//
// # Safety
// `out_dist` must be writable.
enum BecStatus bec_forward_distribution(uint32_t n_total,
                                        uint32_t q,
                                        double x,
                                        struct BecDistribution **out_dist);

// # Safety
// `dist` must be null or a live handle.
void bec_distribution_free(struct BecDistribution *dist);

// Number of support points; the first one is the value 0.
//
// # Safety
// `dist` must be a live handle.
enum BecStatus bec_distribution_len(const struct BecDistribution *dist, size_t *out_len);

// # Safety
// `dist` must be a live handle; `out_probs` must hold `len` values.
enum BecStatus bec_distribution_probs(const struct BecDistribution *dist,
                                      double *out_probs,
                                      size_t len);

// # Safety
// `dist` must be a live handle.
enum BecStatus bec_distribution_mean(const struct BecDistribution *dist, double *out_mean);

// Two-level scattering phase `3π/4 − arg Γ(iy)`.
//
// # Safety
// `out_phase` must be writable.
enum BecStatus bec_lz_phase(double y, double *out_phase);

// Probability of converting every atom pair in one associating sweep.
//
// # Safety
// `out_prob` must be writable.
enum BecStatus bec_corner_probability(uint32_t n_total, uint32_t q, double x, double *out_prob);

// Cat state left behind by dissociating a coherent molecular condensate.
//
// # Safety
// `out_state` must be writable.
enum BecStatus bec_cat_state_new(double alpha_re,
                                 double alpha_im,
                                 double lambda,
                                 double tol,
                                 struct BecCatState **out_state);

// # Safety
// `state` must be null or a live handle.
void bec_cat_state_free(struct BecCatState *state);

// Overlap `⟨α|A⟩` with a Glauber coherent state.
//
// # Safety
// `state` must be a live handle; the out-pointers must be writable.
enum BecStatus bec_cat_overlap(const struct BecCatState *state,
                               double re,
                               double im,
                               double *out_re,
                               double *out_im);

// # Safety
// `state` must be a live handle.
enum BecStatus bec_cat_squeezing_ratio(const struct BecCatState *state, double *out_ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEC_SWEEP_H */
