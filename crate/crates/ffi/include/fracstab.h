#ifndef FRACSTAB_H
#define FRACSTAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The numeric values of the first four match the CLI exit codes.
 */
typedef enum FsStatus {
  FS_STATUS_OK = 0,
  /**
   * The run completed but a gating check failed.
   */
  FS_STATUS_ENVELOPE_FAIL = 1,
  /**
   * Bad argument, config or I/O.
   */
  FS_STATUS_USAGE = 2,
  /**
   * Numerical failure inside the solver or a certificate.
   */
  FS_STATUS_NUMERICAL = 3,
  FS_STATUS_NULL_POINTER = 4,
  FS_STATUS_PANIC = 5,
} FsStatus;

/**
 * Result of [`fs_run`].
 */
typedef struct FsReport FsReport;

/**
 * A validated scenario together with its certificate request.
 */
typedef struct FsScenario FsScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next `fs_*` call on the same thread.
 */
const char *fs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fs_version(void);

/**
 * One-parameter Mittag-Leffler function E_q(z).
 *
 * # Safety
 * `out` must be a valid pointer to a writable `double`.
 */
enum FsStatus fs_ml_one(double q, double z, double *out);

/**
 * Two-parameter Mittag-Leffler function E_{q,b}(z).
 *
 * # Safety
 * `out` must be a valid pointer to a writable `double`.
 */
enum FsStatus fs_ml_two(double q, double b, double z, double *out);

/**
 * Parse a TOML scenario document.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FsStatus fs_scenario_from_toml(const char *text, struct FsScenario **out);

/**
 * Load one of the built-in demo scenarios by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FsStatus fs_scenario_demo(const char *name, struct FsScenario **out);

/**
 * Override the derivative order of a scenario.
 *
 * # Safety
 * `scn` must come from an `fs_scenario_*` constructor.
 */
enum FsStatus fs_scenario_set_q(struct FsScenario *scn, double q);

/**
 * Override the worker count used by parallel stages.
 *
 * # Safety
 * `scn` must come from an `fs_scenario_*` constructor.
 */
enum FsStatus fs_scenario_set_workers(struct FsScenario *scn, size_t workers);

/**
 * # Safety
 * `scn` must be null or come from an `fs_scenario_*` constructor, freed once.
 */
void fs_scenario_free(struct FsScenario *scn);

/**
 * Simulate, certify and verify. A failed envelope check still produces a
 * report and returns `EnvelopeFail`.
 *
 * # Safety
 * `scn` must be a live scenario handle and `out` a valid pointer.
 */
enum FsStatus fs_run(const struct FsScenario *scn, struct FsReport **out);

/**
 * 1 when every gating check passed, 0 otherwise (or on null).
 *
 * # Safety
 * `rep` must be null or a live report handle.
 */
int32_t fs_report_pass(const struct FsReport *rep);

/**
 * Text report; release with [`fs_string_free`]. Null on failure.
 *
 * # Safety
 * `rep` must be a live report handle.
 */
char *fs_report_text(const struct FsReport *rep);

/**
 * JSON report; release with [`fs_string_free`]. Null on failure.
 *
 * # Safety
 * `rep` must be a live report handle.
 */
char *fs_report_json(const struct FsReport *rep);

/**
 * Number of points in the envelope series (0 when no envelope was checked).
 *
 * # Safety
 * `rep` must be null or a live report handle.
 */
size_t fs_report_series_len(const struct FsReport *rep);

/**
 * Copy up to `len` points of the envelope series. Any output pointer may be
 * null to skip that column. Returns the number of points written in `written`.
 *
 * # Safety
 * Non-null buffers must hold at least `len` doubles.
 */
enum FsStatus fs_report_series(const struct FsReport *rep,
                               double *t,
                               double *value,
                               double *bound,
                               size_t len,
                               size_t *written);

/**
 * # Safety
 * `rep` must be null or come from [`fs_run`], freed once.
 */
void fs_report_free(struct FsReport *rep);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void fs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACSTAB_H */
