#ifndef HOTSPOT_H
#define HOTSPOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum HotspotStatus {
  HOTSPOT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HOTSPOT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  HOTSPOT_STATUS_INVALID_UTF8 = 2,
  /**
   * The scenario or another input failed validation.
   */
  HOTSPOT_STATUS_INVALID_INPUT = 3,
  /**
   * Reading or writing a file failed.
   */
  HOTSPOT_STATUS_IO = 4,
  /**
   * The simulation itself failed.
   */
  HOTSPOT_STATUS_RUNTIME = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  HOTSPOT_STATUS_PANIC = 6,
} HotspotStatus;

/**
 * One simulated rollout: its event log and daily compartment counts.
 */
typedef struct HotspotRollout HotspotRollout;

/**
 * A validated scenario with its region data loaded.
 */
typedef struct HotspotScenario HotspotScenario;

/**
 * Compartment counts at the end of one simulated day. The compartments
 * other than `hospitalized` partition the population.
 */
typedef struct HotspotDaily {
  uint32_t day;
  uint64_t susceptible;
  uint64_t exposed;
  uint64_t infectious_asym;
  uint64_t infectious_presym;
  uint64_t infectious_sym;
  /**
   * Symptomatic cases currently in hospital, a subset of `infectious_sym`.
   */
  uint64_t hospitalized;
  uint64_t recovered;
  uint64_t dead;
  uint64_t cum_positive_tests;
} HotspotDaily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *hotspot_last_error_message(void);

/**
 * Library version as a static, nul-terminated string.
 */
const char *hotspot_version(void);

/**
 * Loads and validates a scenario file. Relative region paths are resolved
 * against the file's directory.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum HotspotStatus hotspot_scenario_load(const char *path, struct HotspotScenario **out);

/**
 * Parses and validates a scenario from JSON text. Relative region paths are
 * resolved against the working directory.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum HotspotStatus hotspot_scenario_from_json(const char *json, struct HotspotScenario **out);

/**
 * Releases a scenario; null is ignored.
 *
 * # Safety
 * `scenario` must come from a `hotspot_scenario_*` constructor and not be
 * used afterwards.
 */
void hotspot_scenario_free(struct HotspotScenario *scenario);

/**
 * Simulation horizon in days, or 0 for a null scenario.
 *
 * # Safety
 * `scenario` must be null or a live scenario handle.
 */
uint32_t hotspot_scenario_days(const struct HotspotScenario *scenario);

/**
 * Number of rollouts the scenario asks for, or 0 for a null scenario.
 *
 * # Safety
 * `scenario` must be null or a live scenario handle.
 */
size_t hotspot_scenario_rollouts(const struct HotspotScenario *scenario);

/**
 * Runs rollout `index` of the scenario. The seed is derived from the
 * scenario's master seed exactly as the command-line tool does, so the event
 * log matches `rollout_<index>/events.jsonl` of a `simulate` run.
 *
 * # Safety
 * `scenario` must be a live scenario handle and `out` a valid pointer.
 */
enum HotspotStatus hotspot_simulate(const struct HotspotScenario *scenario,
                                    uint32_t index,
                                    struct HotspotRollout **out);

/**
 * Releases a rollout; null is ignored.
 *
 * # Safety
 * `rollout` must come from `hotspot_simulate` and not be used afterwards.
 */
void hotspot_rollout_free(struct HotspotRollout *rollout);

/**
 * Seed the rollout was simulated with, or 0 for a null rollout.
 *
 * # Safety
 * `rollout` must be null or a live rollout handle.
 */
uint64_t hotspot_rollout_seed(const struct HotspotRollout *rollout);

/**
 * Number of individuals in the rollout's world.
 *
 * # Safety
 * `rollout` must be null or a live rollout handle.
 */
size_t hotspot_rollout_population(const struct HotspotRollout *rollout);

/**
 * Number of logged events.
 *
 * # Safety
 * `rollout` must be null or a live rollout handle.
 */
size_t hotspot_rollout_num_events(const struct HotspotRollout *rollout);

/**
 * Number of daily rows available from `hotspot_rollout_daily`.
 *
 * # Safety
 * `rollout` must be null or a live rollout handle.
 */
size_t hotspot_rollout_num_days(const struct HotspotRollout *rollout);

/**
 * Copies up to `capacity` daily rows into `buf` and stores the number
 * copied in `written`.
 *
 * # Safety
 * `rollout` must be a live rollout handle, `buf` must have room for
 * `capacity` rows (it may be null when `capacity` is 0) and `written` must be
 * a valid pointer.
 */
enum HotspotStatus hotspot_rollout_daily(const struct HotspotRollout *rollout,
                                         struct HotspotDaily *buf,
                                         size_t capacity,
                                         size_t *written);

/**
 * Writes the event log as JSON lines to `path`.
 *
 * # Safety
 * `rollout` must be a live rollout handle and `path` a nul-terminated string.
 */
enum HotspotStatus hotspot_rollout_write_events(const struct HotspotRollout *rollout,
                                                const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOTSPOT_H */
