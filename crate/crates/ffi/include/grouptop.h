#ifndef GROUPTOP_H
#define GROUPTOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Overall outcome of a report, mirroring the CLI exit codes.
 */
typedef enum GtOutcome {
  GT_OUTCOME_VERIFIED = 0,
  GT_OUTCOME_REFUTED = 2,
  GT_OUTCOME_UNKNOWN = 3,
} GtOutcome;

/**
 * Return code of every fallible entry point.
 */
typedef enum GtStatus {
  GT_STATUS_OK = 0,
  GT_STATUS_NULL_POINTER = 1,
  GT_STATUS_INVALID_UTF8 = 2,
  GT_STATUS_INVALID_ARGUMENT = 3,
  GT_STATUS_PARSE_ERROR = 4,
  GT_STATUS_PANIC = 5,
} GtStatus;

/**
 * Opaque verification report.
 */
typedef struct GtReport GtReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Verifies `g ∉ n·S(k)*` for the sqrt7 chain.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GtStatus gt_verify_sqrt7_necessary(int64_t g, uint32_t n, struct GtReport **out);

/**
 * All `1 ≤ |g| ≤ gmax`, `1 ≤ n ≤ nmax`, one claim per `(|g|, n)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GtStatus gt_verify_sqrt7_range(uint64_t gmax, uint32_t nmax, struct GtReport **out);

/**
 * The Fibonacci commutator identities for `i ≤ n`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GtStatus gt_verify_fib_identity(uint32_t n, struct GtReport **out);

/**
 * Runs the Hausdorff criteria on a JSON config (same schema as the CLI).
 *
 * # Safety
 * `config` must be a nul-terminated string; `out` must be writable.
 */
enum GtStatus gt_hausdorff_from_json(const char *config, struct GtReport **out);

/**
 * Canonical square root of `a` modulo `p^k`, as a decimal string.
 *
 * # Safety
 * `root` must be a valid pointer to writable storage for one string.
 */
enum GtStatus gt_hensel_sqrt(int64_t a, uint64_t p, uint32_t k, char **root);

/**
 * Overall outcome; `GT_OUTCOME_UNKNOWN` for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle from this library.
 */
enum GtOutcome gt_report_outcome(const struct GtReport *report);

/**
 * Number of claims; 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle from this library.
 */
size_t gt_report_claim_count(const struct GtReport *report);

/**
 * The report as pretty-printed JSON; null for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle from this library.
 */
char *gt_report_to_json(const struct GtReport *report);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void gt_report_free(struct GtReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void gt_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Owned by the
 * library; valid until the next call on this thread.
 */
const char *gt_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GROUPTOP_H */
