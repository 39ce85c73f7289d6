#ifndef SLAMSAFE_H
#define SLAMSAFE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlamsafeStatus {
  SLAMSAFE_STATUS_OK = 0,
  SLAMSAFE_STATUS_NULL_POINTER = 1,
  SLAMSAFE_STATUS_INVALID_ARGUMENT = 2,
  SLAMSAFE_STATUS_CONFIG = 3,
  SLAMSAFE_STATUS_FORMAT = 4,
  SLAMSAFE_STATUS_IO = 5,
  SLAMSAFE_STATUS_MISSING_ARTIFACT = 6,
  SLAMSAFE_STATUS_COLLISION = 7,
  SLAMSAFE_STATUS_NO_PATH = 8,
  SLAMSAFE_STATUS_DEGENERATE = 9,
  SLAMSAFE_STATUS_STUCK = 10,
  SLAMSAFE_STATUS_PANIC = 11,
} SlamsafeStatus;

/**
 * Direction of travel relative to the camera heading. Passed across the
 * ABI as a `uint8_t` and validated.
 */
typedef enum SlamsafeDirection {
  SLAMSAFE_DIRECTION_FORWARD = 0,
  SLAMSAFE_DIRECTION_BACKWARD = 1,
} SlamsafeDirection;

typedef struct SlamsafeMap SlamsafeMap;

typedef struct SlamsafeOracle SlamsafeOracle;

typedef struct SlamsafeQTable SlamsafeQTable;

/**
 * Pose in meters and radians.
 */
typedef struct SlamsafePose {
  double x;
  double y;
  double theta;
} SlamsafePose;

typedef struct SlamsafeVec2 {
  double x;
  double y;
} SlamsafeVec2;

/**
 * Step features: direction, absolute heading change in degrees [0, 30],
 * co-visible landmark count [0, 600].
 */
typedef struct SlamsafeFeatures {
  /**
   * A `SlamsafeDirection` value.
   */
  uint8_t direction;
  double dtheta_deg;
  uint32_t overlap;
} SlamsafeFeatures;

typedef struct SlamsafeCell {
  uint8_t eta_bin;
  uint8_t angle_bin;
  uint8_t overlap_bin;
  /**
   * Position in the flat 800-entry table.
   */
  uint32_t linear;
} SlamsafeCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *slamsafe_version(void);

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; empty if none failed.
 */
const char *slamsafe_last_error(void);

/**
 * Loads a map file.
 */
enum SlamsafeStatus slamsafe_map_load(const char *path, struct SlamsafeMap **out_map);

/**
 * Parses a map from its JSON text.
 */
enum SlamsafeStatus slamsafe_map_from_json(const char *json, struct SlamsafeMap **out_map);

/**
 * Generates a map. `style` is one of corridor, room, corner, mixed.
 */
enum SlamsafeStatus slamsafe_map_generate(uint64_t seed,
                                          const char *style,
                                          double density,
                                          struct SlamsafeMap **out_map);

void slamsafe_map_free(struct SlamsafeMap *map);

enum SlamsafeStatus slamsafe_map_start(const struct SlamsafeMap *map,
                                       struct SlamsafePose *out_pose);

enum SlamsafeStatus slamsafe_map_goal(const struct SlamsafeMap *map, struct SlamsafeVec2 *out_goal);

enum SlamsafeStatus slamsafe_map_landmark_count(const struct SlamsafeMap *map,
                                                uintptr_t *out_count);

/**
 * Features of the step `from → to` with the default camera.
 */
enum SlamsafeStatus slamsafe_featurize(const struct SlamsafeMap *map,
                                       const struct SlamsafePose *from,
                                       const struct SlamsafePose *to,
                                       uint8_t direction,
                                       struct SlamsafeFeatures *out_features);

enum SlamsafeStatus slamsafe_discretize(const struct SlamsafeFeatures *features_in,
                                        struct SlamsafeCell *out_cell);

/**
 * Step reward under the default weights; `broke` is nonzero on breakage.
 */
enum SlamsafeStatus slamsafe_reward(const struct SlamsafeFeatures *features_in,
                                    uint8_t broke,
                                    double *out_reward);

enum SlamsafeStatus slamsafe_qtable_load(const char *path, struct SlamsafeQTable **out_q);

enum SlamsafeStatus slamsafe_qtable_from_json(const char *json, struct SlamsafeQTable **out_q);

void slamsafe_qtable_free(struct SlamsafeQTable *q);

/**
 * Value and visit count of the cell at flat index `linear`.
 */
enum SlamsafeStatus slamsafe_qtable_cell(const struct SlamsafeQTable *q,
                                         uint32_t linear,
                                         double *out_value,
                                         uint64_t *out_visits);

/**
 * Filter verdict: 1 when the step's cell has at least `min_visits` visits
 * and a value at or above `threshold`.
 */
enum SlamsafeStatus slamsafe_is_safe(const struct SlamsafeQTable *q,
                                     const struct SlamsafeFeatures *features_in,
                                     double threshold,
                                     uint64_t min_visits,
                                     uint8_t *out_safe);

/**
 * Breakage model with the given corner probabilities and overlap share.
 */
enum SlamsafeStatus slamsafe_oracle_calibrate(double target_low,
                                              double target_high,
                                              double overlap_share,
                                              uint64_t seed,
                                              struct SlamsafeOracle **out_oracle);

void slamsafe_oracle_free(struct SlamsafeOracle *oracle);

enum SlamsafeStatus slamsafe_oracle_probability(const struct SlamsafeOracle *oracle,
                                                const struct SlamsafeFeatures *features_in,
                                                double *out_p);

/**
 * Point at `t` ∈ [0, 1] on the quintic Bernstein curve with the six
 * control points at `control`.
 */
enum SlamsafeStatus slamsafe_bernstein_eval(const struct SlamsafeVec2 *control,
                                            double t,
                                            struct SlamsafeVec2 *out_point);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLAMSAFE_H */
