#ifndef LISTLABEL_H
#define LISTLABEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LlAlgo {
  LL_ALGO_CLASSICAL = 0,
  LL_ALGO_SEESAW = 1,
} LlAlgo;

typedef enum LlStatus {
  LL_STATUS_OK = 0,
  LL_STATUS_NULL_POINTER = 1,
  LL_STATUS_INVALID_ARGUMENT = 2,
  LL_STATUS_CAPACITY = 3,
  LL_STATUS_DUPLICATE_KEY = 4,
  LL_STATUS_MISSING_KEY = 5,
  /**
   * The structure is inconsistent; the handle should be freed.
   */
  LL_STATUS_INTEGRITY = 6,
  /**
   * The operation is not available for this kind of handle.
   */
  LL_STATUS_UNSUPPORTED = 7,
  LL_STATUS_IO = 8,
  LL_STATUS_PANIC = 9,
} LlStatus;

/**
 * Opaque structure handle.
 */
typedef struct LlHandle LlHandle;

/**
 * Structure construction options. Zero constants select the defaults.
 */
typedef struct LlOptions {
  enum LlAlgo algo;
  uint64_t seed;
  double c_alpha;
  double c_beta;
  bool pma;
  bool check;
} LlOptions;

/**
 * Moves per cost category plus operation counts.
 */
typedef struct LlLedger {
  uint64_t rebuild_moves;
  uint64_t reset_moves;
  uint64_t leaf_moves;
  uint64_t expensive_leaf_moves;
  uint64_t total_moves;
  uint64_t expensive_leaf_arrivals;
  uint64_t inserts;
  uint64_t deletes;
} LlLedger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default options for `algo`.
 */
struct LlOptions ll_default_options(enum LlAlgo algo);

/**
 * Creates an insert-only structure over `m` slots holding `initial`
 * (sorted, distinct, `initial_len` keys).
 *
 * # Safety
 * `options` and `out` must be valid; `initial` must point to `initial_len` keys.
 */
enum LlStatus ll_new(const struct LlOptions *options,
                     size_t m,
                     const uint64_t *initial,
                     size_t initial_len,
                     struct LlHandle **out);

/**
 * Creates a structure supporting deletions over `m` slots, holding at
 * most `(1 - delta) m` keys.
 *
 * # Safety
 * As for [`ll_new`].
 */
enum LlStatus ll_dynamic_new(const struct LlOptions *options,
                             size_t m,
                             double delta,
                             const uint64_t *initial,
                             size_t initial_len,
                             struct LlHandle **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `h` must come from a constructor here and not be used afterwards.
 */
void ll_free(struct LlHandle *h);

/**
 * Inserts `key`; `cost` (optional) receives the moves it took.
 *
 * # Safety
 * `h` must be a live handle; `cost` may be null.
 */
enum LlStatus ll_insert(struct LlHandle *h, uint64_t key, uint64_t *cost);

/**
 * Deletes `key`. Only handles from [`ll_dynamic_new`] support this.
 *
 * # Safety
 * As for [`ll_insert`].
 */
enum LlStatus ll_delete(struct LlHandle *h, uint64_t key, uint64_t *cost);

/**
 * Number of live keys.
 *
 * # Safety
 * `h` and `out` must be valid.
 */
enum LlStatus ll_len(const struct LlHandle *h, size_t *out);

/**
 * Number of slots.
 *
 * # Safety
 * `h` and `out` must be valid.
 */
enum LlStatus ll_slot_count(const struct LlHandle *h, size_t *out);

/**
 * Total moves since construction, including the initial placement.
 *
 * # Safety
 * `h` and `out` must be valid.
 */
enum LlStatus ll_total_moves(const struct LlHandle *h, uint64_t *out);

/**
 * # Safety
 * `h` and `out` must be valid.
 */
enum LlStatus ll_ledger(const struct LlHandle *h, struct LlLedger *out);

/**
 * Copies the slot array: `keys[i]` holds the key in slot `i` when
 * `occupied[i]` is 1. Both buffers need [`ll_slot_count`] entries. Deleted
 * keys awaiting a rebuild still occupy their slots.
 *
 * # Safety
 * `keys` and `occupied` must each hold `len` elements.
 */
enum LlStatus ll_read_slots(const struct LlHandle *h,
                            uint64_t *keys,
                            uint8_t *occupied,
                            size_t len);

/**
 * Verifies every structural invariant.
 *
 * # Safety
 * `h` must be valid.
 */
enum LlStatus ll_check(const struct LlHandle *h);

/**
 * Copies the calling thread's last error message, NUL terminated and
 * truncated to `len` bytes. Returns the full message length.
 *
 * # Safety
 * `buf` must hold `len` bytes, or be null when `len` is 0.
 */
size_t ll_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LISTLABEL_H */
