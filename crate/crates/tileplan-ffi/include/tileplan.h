#ifndef TILEPLAN_H
#define TILEPLAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum TpStatus {
  TpOk = 0,
  TpErrIo = 1,
  TpErrFormat = 2,
  TpErrInvalidArg = 3,
  TpErrRobotMismatch = 4,
  TpErrPlanning = 5,
  TpErrPanic = 6,
} TpStatus;

/**
 * Planner selector.
 */
typedef enum TpPlanner {
  TpPlannerTilingDrrt = 0,
  TpPlannerRrt = 1,
} TpPlanner;

/**
 * Terminal state of a finished plan call.
 */
typedef enum TpPlanOutcome {
  TpSolved = 0,
  TpTimeout = 2,
  TpStartIsolated = 3,
} TpPlanOutcome;

typedef struct TpBundle TpBundle;

typedef struct TpResult TpResult;

typedef struct TpScenario TpScenario;

/**
 * Query parameters. Zero-initialize and override what you need;
 * zeros select the library defaults.
 */
typedef struct TpPlanParams {
  uint64_t max_iters;
  uint64_t time_budget_ms;
  double goal_bias;
  double step_rad;
  uint64_t k_start;
  uint64_t seed;
} TpPlanParams;

/**
 * Per-run counters mirrored from the planner.
 */
typedef struct TpStats {
  uint64_t iterations;
  uint64_t tree_size;
  uint64_t self_collision_checks;
  uint64_t obstacle_checks;
  uint64_t attachment_self_checks;
  double wall_time_ms;
} TpStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *tp_last_error(void);

/**
 * Builds a roadmap bundle for a free-flying open chain.
 * `k == 0` selects the default neighbor count, `step <= 0` the
 * default interpolation resolution.
 *
 * # Safety
 * `links` must point to `n_links` doubles; `out` must be valid.
 */
enum TpStatus tp_bundle_build(const double *links,
                              uintptr_t n_links,
                              uint32_t n,
                              uint32_t k,
                              double step,
                              uint64_t seed,
                              struct TpBundle **out);

/**
 * # Safety
 * `path` must be a valid C string, `out` a valid pointer.
 */
enum TpStatus tp_bundle_load(const char *path, struct TpBundle **out);

/**
 * # Safety
 * `bundle` must come from this library; `path` must be a C string.
 */
enum TpStatus tp_bundle_save(const struct TpBundle *bundle, const char *path);

/**
 * Number of base configurations in the bundle.
 *
 * # Safety
 * `bundle` must come from this library.
 */
uint32_t tp_bundle_size(const struct TpBundle *bundle);

/**
 * # Safety
 * `bundle` must come from this library or be null.
 */
void tp_bundle_free(struct TpBundle *bundle);

/**
 * # Safety
 * `path` must be a valid C string, `out` a valid pointer.
 */
enum TpStatus tp_scenario_load(const char *path, struct TpScenario **out);

/**
 * Builds one of the built-in analog scenes: "tight", "coiled",
 * "bricks_open" or "gripper".
 *
 * # Safety
 * `kind` must be a valid C string, `out` a valid pointer.
 */
enum TpStatus tp_scenario_generate(const char *kind,
                                   double scale,
                                   uint64_t seed,
                                   struct TpScenario **out);

/**
 * # Safety
 * `scenario` must come from this library; `path` must be a C string.
 */
enum TpStatus tp_scenario_save(const struct TpScenario *scenario, const char *path);

/**
 * # Safety
 * `scenario` must come from this library or be null.
 */
void tp_scenario_free(struct TpScenario *scenario);

/**
 * Runs a planner on a (bundle, scenario) pair. A successful call
 * always produces a result handle, whatever the planning outcome.
 *
 * # Safety
 * All pointers must be valid; `params` may be null for defaults.
 */
enum TpStatus tp_plan(const struct TpBundle *bundle,
                      const struct TpScenario *scenario,
                      enum TpPlanner planner,
                      const struct TpPlanParams *params,
                      struct TpResult **out);

/**
 * # Safety
 * `result` must come from this library.
 */
enum TpPlanOutcome tp_result_outcome(const struct TpResult *result);

/**
 * # Safety
 * Both pointers must be valid.
 */
enum TpStatus tp_result_stats(const struct TpResult *result, struct TpStats *out);

/**
 * Number of waypoints in the solved path (0 when unsolved).
 *
 * # Safety
 * `result` must come from this library.
 */
uintptr_t tp_result_waypoint_count(const struct TpResult *result);

/**
 * Anchor points per configuration.
 *
 * # Safety
 * `result` must come from this library.
 */
uintptr_t tp_result_anchor_count(const struct TpResult *result);

/**
 * Copies waypoint `index` as interleaved x,y doubles (anchor_count
 * pairs) into `buf`.
 *
 * # Safety
 * `buf` must hold at least `2 * tp_result_anchor_count` doubles.
 */
enum TpStatus tp_result_waypoint(const struct TpResult *result,
                                 uintptr_t index,
                                 double *buf,
                                 uintptr_t buf_len);

/**
 * Serializes the full result (status, stats, waypoints, samples) to
 * JSON. Free the returned string with `tp_string_free`.
 *
 * # Safety
 * `result` must come from this library.
 */
char *tp_result_to_json(const struct TpResult *result);

/**
 * # Safety
 * `s` must have been returned by `tp_result_to_json` or be null.
 */
void tp_string_free(char *s);

/**
 * # Safety
 * `result` must come from this library or be null.
 */
void tp_result_free(struct TpResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TILEPLAN_H */
