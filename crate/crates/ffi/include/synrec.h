#ifndef SYNREC_H
#define SYNREC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum SynrecStatus {
  SYNREC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SYNREC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SYNREC_STATUS_INVALID_UTF8 = 2,
  /**
   * Syntax, name resolution or type error in the source.
   */
  SYNREC_STATUS_PARSE_ERROR = 3,
  /**
   * The templates could not be expanded.
   */
  SYNREC_STATUS_EXPAND_ERROR = 4,
  /**
   * A configuration value was rejected.
   */
  SYNREC_STATUS_CONFIG_ERROR = 5,
  /**
   * No assignment satisfies the harness within the bounds.
   */
  SYNREC_STATUS_UNSATISFIABLE = 6,
  /**
   * The time budget ran out.
   */
  SYNREC_STATUS_TIMEOUT = 7,
  /**
   * Verification found a failing input.
   */
  SYNREC_STATUS_CHECK_FAILED = 8,
  /**
   * The program still contains holes or choices where none are allowed.
   */
  SYNREC_STATUS_NOT_CONCRETE = 9,
  /**
   * An internal error or panic.
   */
  SYNREC_STATUS_INTERNAL = 10,
} SynrecStatus;

/**
 * Bounds and switches of a synthesis run.
 */
typedef struct SynrecConfig SynrecConfig;

/**
 * A parsed and resolved program, with the template library merged in.
 */
typedef struct SynrecProgram SynrecProgram;

/**
 * Outcome of [`synrec_synthesize`].
 */
typedef struct SynrecResult SynrecResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * is valid until the next failing call on the same thread.
 */
const char *synrec_last_error(void);

/**
 * Library version as a static string.
 */
const char *synrec_version(void);

/**
 * A configuration with default bounds.
 */
struct SynrecConfig *synrec_config_new(void);

/**
 * # Safety
 * `cfg` must be null or come from [`synrec_config_new`] and not be freed yet.
 */
void synrec_config_free(struct SynrecConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_input_depth(struct SynrecConfig *cfg, uint32_t depth);

/**
 * Integer leaves of verification inputs, both bounds inclusive.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_int_domain(struct SynrecConfig *cfg, int64_t lo, int64_t hi);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_hole_domain(struct SynrecConfig *cfg, int64_t lo, int64_t hi);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_inline_bound(struct SynrecConfig *cfg, uint32_t bound);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_unroll(struct SynrecConfig *cfg, uint32_t depth);

/**
 * Zero disables the time budget.
 *
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_timeout_ms(struct SynrecConfig *cfg, uint64_t ms);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum SynrecStatus synrec_config_set_decomposition(struct SynrecConfig *cfg, bool enabled);

/**
 * Parses `source` with the template library `library`, or with the bundled
 * library when `library` is null.
 *
 * # Safety
 * String arguments must be null or nul-terminated; `out` must be writable.
 */
enum SynrecStatus synrec_program_parse(const char *source,
                                       const char *library,
                                       struct SynrecProgram **out);

/**
 * # Safety
 * `prog` must be null or a live program handle.
 */
void synrec_program_free(struct SynrecProgram *prog);

/**
 * Pretty-printed source of a program without synthesis constructs, less
 * the template generators. The
 * string must be released with [`synrec_string_free`].
 *
 * # Safety
 * `prog` must be a live program handle and `out` writable.
 */
enum SynrecStatus synrec_program_print(const struct SynrecProgram *prog, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library for the caller to free.
 */
void synrec_string_free(char *s);

/**
 * Runs synthesis. Returns `Ok` when the run completed, whatever its
 * outcome; query the outcome with [`synrec_result_status`].
 *
 * # Safety
 * `prog` and `cfg` must be live handles and `out` writable.
 */
enum SynrecStatus synrec_synthesize(const struct SynrecProgram *prog,
                                    const struct SynrecConfig *cfg,
                                    struct SynrecResult **out);

/**
 * `Ok` when solved, otherwise `Unsatisfiable` or `Timeout`.
 *
 * # Safety
 * `res` must be a live result handle.
 */
enum SynrecStatus synrec_result_status(const struct SynrecResult *res);

/**
 * Source text of the solution, or null when unsolved.
 *
 * # Safety
 * `res` must be a live result handle.
 */
const char *synrec_result_solution(const struct SynrecResult *res);

/**
 * Statistics as a JSON document, or null for a null handle.
 *
 * # Safety
 * `res` must be a live result handle.
 */
const char *synrec_result_stats_json(const struct SynrecResult *res);

/**
 * # Safety
 * `res` must be null or a live result handle.
 */
void synrec_result_free(struct SynrecResult *res);

/**
 * Verifies a program without synthesis constructs on every input up to the
 * configured depth. On `CheckFailed`, `counterexample` (if not null)
 * receives the failing input, to be released with [`synrec_string_free`].
 *
 * # Safety
 * `prog` and `cfg` must be live handles; `counterexample` null or writable.
 */
enum SynrecStatus synrec_check(const struct SynrecProgram *prog,
                               const struct SynrecConfig *cfg,
                               char **counterexample);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNREC_H */
