#ifndef AOI_RRM_H
#define AOI_RRM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AoiStatus {
  AOI_STATUS_OK = 0,
  AOI_STATUS_NULL_POINTER = 1,
  AOI_STATUS_INVALID_ARGUMENT = 2,
  AOI_STATUS_CONFIG = 3,
  AOI_STATUS_IO = 4,
  AOI_STATUS_NUMERICAL = 5,
  AOI_STATUS_PANIC = 6,
} AoiStatus;

typedef enum AoiLinkClass {
  AOI_LINK_CLASS_LOS = 0,
  AOI_LINK_CLASS_WLOS = 1,
  AOI_LINK_CLASS_NLOS = 2,
} AoiLinkClass;

typedef enum AoiPolicy {
  AOI_POLICY_PROPOSED = 0,
  AOI_POLICY_CHANNEL_AWARE = 1,
  AOI_POLICY_PACKET_AWARE = 2,
  AOI_POLICY_AOI_AWARE = 3,
  AOI_POLICY_RANDOM = 4,
} AoiPolicy;

/**
 * Opaque trained network parameters.
 */
typedef struct AoiCheckpoint AoiCheckpoint;

/**
 * Opaque experiment configuration.
 */
typedef struct AoiConfig AoiConfig;

/**
 * Opaque slot-loop environment driven by a baseline policy.
 */
typedef struct AoiEnv AoiEnv;

/**
 * Linear-scale channel and traffic constants.
 */
typedef struct AoiPhyParams {
  double phi;
  double rho;
  double eta;
  double ell0_m;
  double psi;
  double bandwidth_hz;
  double noise_psd_w_per_hz;
  double slot_s;
  double packet_bits;
  double p_max_w;
  double interference_w;
} AoiPhyParams;

typedef struct AoiTrainSummary {
  uint64_t slots_run;
  uint64_t gradient_steps;
  /**
   * Mean of the last `loss_ma_window` losses; NaN when no step was taken.
   */
  double final_loss;
  bool stopped_on_plateau;
} AoiTrainSummary;

/**
 * Horizon means of one episode; AoI in slots and seconds.
 */
typedef struct AoiEpisodeSummary {
  uint64_t slots;
  double avg_power_w;
  double avg_drops;
  double avg_aoi_slots;
  double avg_aoi_s;
  double avg_utility;
  double discounted_return;
} AoiEpisodeSummary;

/**
 * Across-pair means of one slot.
 */
typedef struct AoiSlotMetrics {
  uint64_t slot;
  double avg_power_w;
  double avg_drops;
  double avg_aoi_slots;
  double avg_aoi_s;
  double avg_utility;
} AoiSlotMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t aoi_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum AoiStatus aoi_config_default(struct AoiConfig **out);

/**
 * Parses a configuration from TOML text; missing keys take defaults.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AoiStatus aoi_config_from_toml(const char *toml, struct AoiConfig **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AoiStatus aoi_config_load(const char *path, struct AoiConfig **out);

/**
 * Number of VUE-pairs in the configuration.
 *
 * # Safety
 * `cfg` and `out` must be valid pointers.
 */
enum AoiStatus aoi_config_num_pairs(const struct AoiConfig *cfg, size_t *out);

/**
 * Linear channel constants derived from the configuration.
 *
 * # Safety
 * `cfg` and `out` must be valid pointers.
 */
enum AoiStatus aoi_config_phy_params(const struct AoiConfig *cfg, struct AoiPhyParams *out);

/**
 * # Safety
 * `cfg` must be null or a handle from `aoi_config_*` not yet freed.
 */
void aoi_config_free(struct AoiConfig *cfg);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum AoiStatus aoi_phy_default(struct AoiPhyParams *out);

/**
 * Distance-based channel gain for a given link class.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum AoiStatus aoi_channel_gain(const struct AoiPhyParams *params,
                                enum AoiLinkClass link,
                                double tx_x,
                                double tx_y,
                                double rx_x,
                                double rx_y,
                                double *out);

/**
 * Transmit power needed to deliver `packets` within one slot.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum AoiStatus aoi_tx_power(const struct AoiPhyParams *params,
                            double gain,
                            bool band,
                            uint32_t packets,
                            double *out);

/**
 * Largest packet count deliverable under the power budget, capped at `r_max_global`.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum AoiStatus aoi_max_packets(const struct AoiPhyParams *params,
                               double gain,
                               bool band,
                               uint32_t r_max_global,
                               uint32_t *out);

/**
 * Per-pair, per-slot utility; AoI in slots.
 */
double aoi_utility(double power_w, double drops, double aoi_slots, double vartheta, double xi);

/**
 * Trains the shared network under `cfg` from its own seed.
 *
 * # Safety
 * `cfg` and `out` must be valid pointers; `summary` may be null.
 */
enum AoiStatus aoi_train(const struct AoiConfig *cfg,
                         struct AoiCheckpoint **out,
                         struct AoiTrainSummary *summary);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AoiStatus aoi_checkpoint_load(const char *path, struct AoiCheckpoint **out);

/**
 * # Safety
 * `ckpt` must be a valid handle and `path` a NUL-terminated string.
 */
enum AoiStatus aoi_checkpoint_save(const struct AoiCheckpoint *ckpt, const char *path);

/**
 * # Safety
 * `ckpt` must be null or a handle not yet freed.
 */
void aoi_checkpoint_free(struct AoiCheckpoint *ckpt);

/**
 * Runs one episode; `ckpt` may be null except for the proposed policy.
 *
 * # Safety
 * `cfg` and `out` must be valid pointers; `ckpt` null or a valid handle.
 */
enum AoiStatus aoi_run_episode(const struct AoiConfig *cfg,
                               enum AoiPolicy policy,
                               const struct AoiCheckpoint *ckpt,
                               uint64_t slots,
                               uint64_t seed,
                               struct AoiEpisodeSummary *out);

/**
 * # Safety
 * `cfg` and `out` must be valid pointers.
 */
enum AoiStatus aoi_env_new(const struct AoiConfig *cfg, uint64_t seed, struct AoiEnv **out);

/**
 * Advances one slot under a baseline policy.
 *
 * # Safety
 * `env` and `out` must be valid pointers.
 */
enum AoiStatus aoi_env_step(struct AoiEnv *env, enum AoiPolicy policy, struct AoiSlotMetrics *out);

/**
 * Current group label of every pair, written to `groups[0..len]`.
 *
 * # Safety
 * `env` must be valid and `groups` must point to `len` writable elements.
 */
enum AoiStatus aoi_env_groups(const struct AoiEnv *env, size_t *groups, size_t len);

/**
 * # Safety
 * `env` must be null or a handle not yet freed.
 */
void aoi_env_free(struct AoiEnv *env);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AOI_RRM_H */
