#ifndef SHREDSIM_H
#define SHREDSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShredStatus {
  SHRED_STATUS_OK = 0,
  SHRED_STATUS_INVALID_PARAMETER = 1,
  SHRED_STATUS_INFEASIBLE_LAW = 2,
  SHRED_STATUS_RETRY_BUDGET_EXCEEDED = 3,
  SHRED_STATUS_MALFORMED_INPUT = 4,
  SHRED_STATUS_VIOLATION = 5,
  SHRED_STATUS_NULL_POINTER = 6,
  SHRED_STATUS_OUT_OF_RANGE = 7,
  SHRED_STATUS_INTERNAL = 8,
} ShredStatus;

/**
 * Excursion handle.
 */
typedef struct ShredExcursion ShredExcursion;

/**
 * Step law handle.
 */
typedef struct ShredLaw ShredLaw;

/**
 * Causal map handle with the tree metrics and slits of its excursion.
 */
typedef struct ShredMap ShredMap;

/**
 * Distances between two coded vertices.
 */
typedef struct ShredPairMetrics {
  double d;
  double d_up;
  double d_down;
  double d_star;
  double v;
} ShredPairMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next shredsim call on the same thread.
 */
const char *shred_last_error_message(void);

/**
 * Stable-domain step law with index `alpha` in (1, 2).
 *
 * # Safety
 * `out` must be a valid pointer to write a handle to.
 */
enum ShredStatus shred_law_stable(double alpha, struct ShredLaw **out);

/**
 * # Safety
 * `law` must be null or a handle from this library, freed at most once.
 */
void shred_law_free(struct ShredLaw *law);

/**
 * Probability of step `k`.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum ShredStatus shred_law_pmf(const struct ShredLaw *law, int64_t k, double *out);

/**
 * Samples an excursion with `n + 1` steps from `seed`.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum ShredStatus shred_excursion_sample(const struct ShredLaw *law,
                                        uintptr_t n,
                                        uint64_t seed,
                                        struct ShredExcursion **out);

/**
 * Excursion from an explicit step sequence.
 *
 * # Safety
 * `steps` must point to `len` readable values and `out` be writable.
 */
enum ShredStatus shred_excursion_from_steps(const int64_t *steps,
                                            uintptr_t len,
                                            struct ShredExcursion **out);

/**
 * Number of steps, `n + 1`.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
uintptr_t shred_excursion_len(const struct ShredExcursion *e);

/**
 * Copies up to `cap` steps into `buf` and returns the total step count.
 *
 * # Safety
 * `e` must be a live handle and `buf` writable for `cap` values.
 */
uintptr_t shred_excursion_steps(const struct ShredExcursion *e, int64_t *buf, uintptr_t cap);

/**
 * # Safety
 * `e` must be null or a handle from this library, freed at most once.
 */
void shred_excursion_free(struct ShredExcursion *e);

/**
 * Builds the causal map of an excursion. The map keeps its own copy.
 *
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum ShredStatus shred_map_build(const struct ShredExcursion *e, struct ShredMap **out);

/**
 * Number of vertices: coded vertices plus the top.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
uintptr_t shred_map_vertex_count(const struct ShredMap *m);

/**
 * Graph distance between vertices `u` and `v`.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum ShredStatus shred_map_distance(const struct ShredMap *m,
                                    uintptr_t u,
                                    uintptr_t v,
                                    uint32_t *out);

/**
 * All five distances between the coded vertices of down-steps `ku`
 * and `kv`.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum ShredStatus shred_map_pair_metrics(const struct ShredMap *m,
                                        uintptr_t ku,
                                        uintptr_t kv,
                                        struct ShredPairMetrics *out);

/**
 * # Safety
 * `m` must be null or a handle from this library, freed at most once.
 */
void shred_map_free(struct ShredMap *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHREDSIM_H */
