#ifndef SWARMTRACK_H
#define SWARMTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StStatus {
  ST_STATUS_OK = 0,
  ST_STATUS_NULL_ARGUMENT = 1,
  ST_STATUS_INVALID_UTF8 = 2,
  ST_STATUS_INVALID_PARAMETER = 3,
  ST_STATUS_INVALID_CONFIG = 4,
  ST_STATUS_NUMERICAL = 5,
  ST_STATUS_IO = 6,
  ST_STATUS_JSON = 7,
  ST_STATUS_OUT_OF_RANGE = 8,
  ST_STATUS_PANIC = 9,
} StStatus;

// Configuration handle.
typedef struct StConfig StConfig;

// Completed episode handle.
typedef struct StEpisode StEpisode;

// Completed Monte Carlo sweep handle.
typedef struct StMonteCarlo StMonteCarlo;

typedef struct StMetrics {
  size_t steps;
  double avg_trace;
  double rmse;
  // NaN when the fleet has a single agent.
  double min_separation;
  double min_altitude;
  double max_altitude;
  size_t detections;
  size_t degraded_plans;
  size_t limit_violations;
} StMetrics;

typedef struct StAgentState {
  double position[3];
  double velocity[3];
} StAgentState;

// Fused estimate of one target: mean `[x, y, vx, vy]` and row-major covariance.
typedef struct StEstimate {
  size_t target_id;
  double mean[4];
  double covariance[16];
} StEstimate;

typedef struct StSweepPoint {
  size_t num_agents;
  size_t num_castaways;
  size_t runs;
  double mean_avg_trace;
  double std_avg_trace;
  double mean_rmse;
  double std_rmse;
  // NaN when every run had a single agent.
  double min_separation;
  double min_altitude;
  size_t degraded_plans;
  size_t limit_violations;
} StSweepPoint;

// Wave field parameters; `steepness_limit <= 0` selects the default bound.
typedef struct StWave {
  double origin[2];
  double wavelength;
  double wave_height;
  double decay_rate;
  double water_depth;
  double gravity;
  double steepness_limit;
} StWave;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *st_last_error(void);

// Library version as a static NUL-terminated string.
const char *st_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string obtained from this library and not yet freed.
void st_string_free(char *s);

// Creates a configuration holding every default.
//
// # Safety
// `out` must be valid for writes.
enum StStatus st_config_default(struct StConfig **out);

// Parses and validates a JSON configuration. Omitted keys take defaults.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for writes.
enum StStatus st_config_from_json(const char *json, struct StConfig **out);

// Serializes the full configuration. Free the result with [`st_string_free`].
//
// # Safety
// `cfg` must be a live handle; `out` must be valid for writes.
enum StStatus st_config_to_json(const struct StConfig *cfg, char **out);

// # Safety
// `cfg` must be a live handle.
enum StStatus st_config_set_seed(struct StConfig *cfg, uint64_t seed);

// Sets fleet size and castaway count; the configuration is left unchanged
// if the result would be invalid.
//
// # Safety
// `cfg` must be a live handle.
enum StStatus st_config_set_fleet(struct StConfig *cfg, size_t num_agents, size_t num_castaways);

// # Safety
// `cfg` must be null or a handle not yet freed.
void st_config_free(struct StConfig *cfg);

// Runs one episode.
//
// # Safety
// `cfg` must be a live handle; `out` must be valid for writes.
enum StStatus st_episode_run(const struct StConfig *cfg, struct StEpisode **out);

// # Safety
// `ep` must be a live handle; `out` must be valid for writes.
enum StStatus st_episode_metrics(const struct StEpisode *ep, struct StMetrics *out);

// Number of logged steps; 0 for a null handle.
//
// # Safety
// `ep` must be null or a live handle.
size_t st_episode_step_count(const struct StEpisode *ep);

// State of `agent` at the start of logged step index `step` (0-based).
//
// # Safety
// `ep` must be a live handle; `out` must be valid for writes.
enum StStatus st_episode_agent_state(const struct StEpisode *ep,
                                     size_t step,
                                     size_t agent,
                                     struct StAgentState *out);

// Fused estimate of `target` after logged step index `step`.
//
// # Safety
// `ep` must be a live handle; `out` must be valid for writes.
enum StStatus st_episode_fused_estimate(const struct StEpisode *ep,
                                        size_t step,
                                        size_t target,
                                        struct StEstimate *out);

// True position of `castaway` at logged step index `step`.
//
// # Safety
// `ep` must be a live handle; `out` must point to three writable doubles.
enum StStatus st_episode_truth(const struct StEpisode *ep,
                               size_t step,
                               size_t castaway,
                               double (*out)[3]);

// Writes the episode tables and summary into directory `dir`.
//
// # Safety
// `ep` must be a live handle; `dir` must be a NUL-terminated string.
enum StStatus st_episode_write(const struct StEpisode *ep, const char *dir);

// # Safety
// `ep` must be null or a handle not yet freed.
void st_episode_free(struct StEpisode *ep);

// Runs `runs` episodes per sweep point. Empty lists (length 0) keep the
// configuration's fleet size or castaway count.
//
// # Safety
// `cfg` must be a live handle; `agents`/`castaways` must hold the given
// number of elements; `out` must be valid for writes.
enum StStatus st_montecarlo_run(const struct StConfig *cfg,
                                size_t runs,
                                const size_t *agents,
                                size_t num_agent_values,
                                const size_t *castaways,
                                size_t num_castaway_values,
                                struct StMonteCarlo **out);

// Number of sweep points; 0 for a null handle.
//
// # Safety
// `mc` must be null or a live handle.
size_t st_montecarlo_point_count(const struct StMonteCarlo *mc);

// # Safety
// `mc` must be a live handle; `out` must be valid for writes.
enum StStatus st_montecarlo_point(const struct StMonteCarlo *mc,
                                  size_t i,
                                  struct StSweepPoint *out);

// # Safety
// `mc` must be a live handle; `dir` must be a NUL-terminated string.
enum StStatus st_montecarlo_write(const struct StMonteCarlo *mc, const char *dir);

// # Safety
// `mc` must be null or a handle not yet freed.
void st_montecarlo_free(struct StMonteCarlo *mc);

// Scalar water velocity of a wave field at planar point `(x, y)` and time
// `tau`.
//
// # Safety
// `wave` must be readable; `out` must be valid for writes.
enum StStatus st_water_velocity(const struct StWave *wave,
                                double x,
                                double y,
                                double tau,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWARMTRACK_H */
