#ifndef COGSTAB_H
#define COGSTAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_INVALID_ARGUMENT = 1,
  CS_STATUS_PRECONDITION_VIOLATED = 2,
  CS_STATUS_OUT_OF_REGION = 3,
  CS_STATUS_DEGENERATE_CHANNEL = 4,
  CS_STATUS_NULL_POINTER = 5,
  CS_STATUS_INVALID_CONFIG = 6,
  CS_STATUS_BUFFER_TOO_SMALL = 7,
  CS_STATUS_INTERNAL = 8,
} CsStatus;

typedef enum CsBranch {
  CS_BRANCH_R1_PRIME = 0,
  CS_BRANCH_R1_DOUBLE_PRIME = 1,
  CS_BRANCH_R1_ETA_NON_POSITIVE = 2,
  CS_BRANCH_R2_PRIME = 3,
  CS_BRANCH_R2_DOUBLE_PRIME = 4,
  CS_BRANCH_COLLISION_R1 = 5,
  CS_BRANCH_COLLISION_R2 = 6,
} CsBranch;

typedef enum CsMode {
  CS_MODE_ORIGINAL = 0,
  CS_MODE_DOMINANT1 = 1,
  CS_MODE_DOMINANT2 = 2,
  CS_MODE_SATURATED_BOTH = 3,
} CsMode;

/**
 * Opaque stability region.
 */
typedef struct CsRegion CsRegion;

/**
 * Reception success probabilities.
 */
typedef struct CsChannel {
  double q11;
  double q22;
  double q112;
  double q212;
} CsChannel;

/**
 * Harvest probability and battery capacity; capacity 0 means unbounded.
 */
typedef struct CsEnergy {
  double delta;
  uint32_t capacity;
} CsEnergy;

typedef struct CsFrontierPoint {
  double lambda1;
  double lambda2;
  enum CsBranch branch;
} CsFrontierPoint;

typedef struct CsPStar {
  double value;
  enum CsBranch branch;
} CsPStar;

/**
 * Aggregate means over replications, with 95% half-widths of the
 * throughputs, and majority stability verdicts.
 */
typedef struct CsSimSummary {
  double throughput1;
  double throughput1_ci95;
  double throughput2;
  double throughput2_ci95;
  double service_rate1;
  double service_rate2;
  double active_fraction1;
  double battery_nonempty_fraction;
  bool stable1;
  bool stable2;
} CsSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *cs_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *cs_version(void);

/**
 * # Safety
 * `channel` must be null or point to a valid `CsChannel`; `out` must be
 * null or writable.
 */
enum CsStatus cs_channel_eta(const struct CsChannel *channel, double *out);

/**
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_battery_nonempty_prob(const struct CsEnergy *energy, double *out);

/**
 * Builds the region; the handle must be released with `cs_region_free`.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_region_new(const struct CsChannel *channel,
                            const struct CsEnergy *energy,
                            struct CsRegion **out);

/**
 * Releases a region. Null is ignored.
 *
 * # Safety
 * `region` must come from `cs_region_new` and not have been freed.
 */
void cs_region_free(struct CsRegion *region);

/**
 * # Safety
 * `region` must be a live handle or null; `out` null or writable.
 */
enum CsStatus cs_region_contains(const struct CsRegion *region,
                                 double lambda1,
                                 double lambda2,
                                 bool *out);

/**
 * `beta * q11`, the supremum of admissible primary rates.
 *
 * # Safety
 * `region` must be a live handle or null; `out` null or writable.
 */
enum CsStatus cs_region_lambda1_extent(const struct CsRegion *region, double *out);

/**
 * Supremum of admissible `lambda2` at `lambda1`; `OutOfRegion` when none.
 *
 * # Safety
 * `region` must be a live handle or null; `out` null or writable.
 */
enum CsStatus cs_region_max_lambda2(const struct CsRegion *region, double lambda1, double *out);

/**
 * Frontier polyline with `n_points` samples. `*written` receives the vertex
 * count; if `buffer` is null or `capacity` is smaller, nothing is copied and
 * `BufferTooSmall` is returned (a null buffer is a size query).
 *
 * # Safety
 * `buffer` must be null or valid for `capacity` elements; other pointers
 * must be null or valid.
 */
enum CsStatus cs_region_polyline(const struct CsRegion *region,
                                 size_t n_points,
                                 struct CsFrontierPoint *buffer,
                                 size_t capacity,
                                 size_t *written);

/**
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_mu1_dominant1(const struct CsChannel *channel,
                               const struct CsEnergy *energy,
                               double p,
                               double *out);

/**
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_mu2_dominant2(const struct CsChannel *channel,
                               const struct CsEnergy *energy,
                               double p,
                               double *out);

/**
 * Secondary service rate with the primary queue stable at `lambda1`.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_mu2_dominant1(const struct CsChannel *channel,
                               const struct CsEnergy *energy,
                               double p,
                               double lambda1,
                               double *out);

/**
 * Primary service rate with the secondary queue stable at `lambda2`.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_mu1_dominant2(const struct CsChannel *channel,
                               const struct CsEnergy *energy,
                               double p,
                               double lambda2,
                               double *out);

/**
 * Optimal access probability at primary rate `lambda1`.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_optimal_p(const struct CsChannel *channel,
                           const struct CsEnergy *energy,
                           double lambda1,
                           struct CsPStar *out);

/**
 * Optimal access probability at secondary rate `lambda2`.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_optimal_p_secondary_axis(const struct CsChannel *channel,
                                          const struct CsEnergy *energy,
                                          double lambda2,
                                          struct CsPStar *out);

/**
 * Simulates the scenario and writes the aggregate summary.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum CsStatus cs_simulate(const struct CsChannel *channel,
                          const struct CsEnergy *energy,
                          double lambda1,
                          double lambda2,
                          double p,
                          enum CsMode mode,
                          uint64_t horizon,
                          uint64_t burn_in,
                          uint64_t seed,
                          uint32_t replications,
                          struct CsSimSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COGSTAB_H */
