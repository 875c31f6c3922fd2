#ifndef AGROTRACK_H
#define AGROTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AgStatus {
  AG_STATUS_OK = 0,
  AG_STATUS_NULL_POINTER = 1,
  AG_STATUS_INVALID_UTF8 = 2,
  AG_STATUS_VALIDATION = 3,
  AG_STATUS_DOMAIN = 4,
  AG_STATUS_INFEASIBLE = 5,
  AG_STATUS_PARSE = 6,
  AG_STATUS_RESOURCE = 7,
  AG_STATUS_INTERNAL = 8,
} AgStatus;

/**
 * Opaque result of one simulation run.
 */
typedef struct AgReport AgReport;

/**
 * Opaque validated scenario.
 */
typedef struct AgScenario AgScenario;

typedef struct AgRadio {
  double tx_power_dbm;
  double tx_gain_dbi;
  double rx_gain_dbi;
  double noise_figure_db;
  uint8_t spreading_factor;
  uint8_t coding_rate;
  uint32_t bandwidth_hz;
  uint32_t payload_bytes;
} AgRadio;

typedef struct AgChannel {
  double pl_d0_db;
  double d0_m;
  double path_loss_exponent;
  double shadowing_sigma_db;
  double obstruction_loss_db;
  double logistic_alpha_per_db;
} AgChannel;

/**
 * Energy profile; `t_tx_s` <= 0 takes the transmit window from the radio's airtime.
 */
typedef struct AgEnergy {
  double i_sen_ma;
  double i_proc_ma;
  double i_tx_ma;
  double i_rx_ma;
  double i_slp_ma;
  double t_sen_s;
  double t_proc_s;
  double t_tx_s;
  double t_rx_s;
  double report_interval_s;
  double solar_credit_mj_per_cycle;
  double capacity_mah;
  double voltage_v;
} AgEnergy;

typedef struct AgLinkBudget {
  double distance_m;
  double path_loss_db;
  double snr_db;
  double margin_db;
  double p_succ_los;
  double p_succ_obs;
  double p_succ_los_mean;
  double p_succ_obs_mean;
} AgLinkBudget;

typedef struct AgSummary {
  uint64_t seed;
  uint32_t nodes;
  uint64_t generated;
  double pdr;
  double loss;
  double collision_rate;
  double throughput_msg_s;
  double recovery_ratio;
  uint64_t alerts;
  /**
   * NaN when no node drew any charge.
   */
  double mean_projected_lifetime_h;
} AgSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. Valid until the next call.
 */
const char *ag_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ag_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void ag_string_free(char *s);

struct AgRadio ag_radio_default(void);

struct AgChannel ag_channel_default(void);

struct AgEnergy ag_energy_default(void);

/**
 * LoRa packet airtime in seconds.
 *
 * # Safety
 * `radio` and `out_s` must be valid pointers.
 */
enum AgStatus ag_time_on_air(const struct AgRadio *radio, double *out_s);

/**
 * Zero-shadow link budget at `distance_m`.
 *
 * # Safety
 * `radio`, `channel` and `out` must be valid pointers.
 */
enum AgStatus ag_link_budget(double distance_m,
                             const struct AgRadio *radio,
                             const struct AgChannel *channel,
                             struct AgLinkBudget *out);

/**
 * Average current (mA) and battery lifetime (h) for one duty cycle.
 *
 * # Safety
 * `energy` and `radio` must be valid; either output pointer may be NULL.
 */
enum AgStatus ag_lifetime(const struct AgEnergy *energy,
                          const struct AgRadio *radio,
                          double *out_i_avg_ma,
                          double *out_lifetime_h);

/**
 * Slotted-attempt collision probability; `jitter` spreads attempts over `k_microslots`.
 *
 * # Safety
 * `out_p` must be a valid pointer.
 */
enum AgStatus ag_collision_prob(uint32_t n_nodes,
                                double tau,
                                uint32_t k_microslots,
                                bool jitter,
                                double *out_p);

/**
 * Parse and validate a scenario from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum AgStatus ag_scenario_from_json(const char *json, struct AgScenario **out);

/**
 * Load one of the scenarios shipped with the library by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` a valid pointer.
 */
enum AgStatus ag_scenario_bundled(const char *name, struct AgScenario **out);

/**
 * Deep-merge a JSON overlay into the scenario; on failure the scenario is unchanged.
 *
 * # Safety
 * `scenario` must be a live handle; `overlay_json` a NUL-terminated string.
 */
enum AgStatus ag_scenario_apply_overlay(struct AgScenario *scenario, const char *overlay_json);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum AgStatus ag_scenario_set_seed(struct AgScenario *scenario, uint64_t seed);

/**
 * Scenario as pretty JSON; release with `ag_string_free`.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid pointer.
 */
enum AgStatus ag_scenario_to_json(const struct AgScenario *scenario, char **out);

/**
 * # Safety
 * `scenario` must be NULL or a handle not yet freed.
 */
void ag_scenario_free(struct AgScenario *scenario);

/**
 * Run the scenario to completion.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid pointer.
 */
enum AgStatus ag_run(const struct AgScenario *scenario, struct AgReport **out);

/**
 * # Safety
 * `report` must be a live handle; `out` a valid pointer.
 */
enum AgStatus ag_report_summary(const struct AgReport *report, struct AgSummary *out);

/**
 * Full report as pretty JSON; release with `ag_string_free`.
 *
 * # Safety
 * `report` must be a live handle; `out` a valid pointer.
 */
enum AgStatus ag_report_to_json(const struct AgReport *report, char **out);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void ag_report_free(struct AgReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGROTRACK_H */
