/* C bindings for the graspkit grasp toolkit. */

#ifndef GRASPKIT_H
#define GRASPKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every entry point.
 */
typedef enum GkStatus {
  GK_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GK_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument value was out of range (dimensions, width, name).
   */
  GK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The gripper spec text failed to parse or validate.
   */
  GK_STATUS_INVALID_SPEC = 3,
  /**
   * The rendered gripper fell entirely outside the crop.
   */
  GK_STATUS_OUT_OF_FRAME = 4,
  /**
   * No valid grasp was found (planning only).
   */
  GK_STATUS_NO_GRASP = 5,
  /**
   * Unexpected internal failure.
   */
  GK_STATUS_INTERNAL = 6,
} GkStatus;

/**
 * Opaque gripper handle.
 */
typedef struct GkGripper GkGripper;

/**
 * Rule-evaluation outcome for one action.
 */
typedef struct GkOutcome {
  bool success;
  /**
   * 0 = none, 1..3 = first failed rule.
   */
  int32_t failed_rule;
  double quality;
  /**
   * Distance from crop center to the contact centroid; -1 when the
   * closing path never touches the object.
   */
  double stability_distance;
} GkOutcome;

/**
 * A planned grasp.
 */
typedef struct GkGrasp {
  double x;
  double y;
  double theta;
  double width;
  double quality;
} GkGrasp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Toolkit version as a static NUL-terminated string.
 */
const char *gk_version(void);

/**
 * Parse a gripper spec document (`.gspec` text).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be writable.
 */
enum GkStatus gk_gripper_parse(const char *text, struct GkGripper **out);

/**
 * Construct a built-in gripper: "parallel_jaw", "radial_3f", or "radial_4f".
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be writable.
 */
enum GkStatus gk_gripper_preset(const char *name, struct GkGripper **out);

/**
 * Release a gripper handle. Null is a no-op.
 *
 * # Safety
 * `g` must be a handle from a `gk_gripper_*` constructor, freed once.
 */
void gk_gripper_free(struct GkGripper *g);

/**
 * Opening range and symmetry order of a gripper.
 *
 * # Safety
 * All pointers must be valid; out pointers may be null to skip a field.
 */
enum GkStatus gk_gripper_info(const struct GkGripper *g,
                              double *w_min,
                              double *w_max,
                              uint32_t *symmetry_order);

/**
 * Evaluate one action (θ, opening width) against a square object crop.
 *
 * # Safety
 * `object` must point to `width * height` bytes; `g` and `out` must be
 * valid pointers.
 */
enum GkStatus gk_evaluate(const struct GkGripper *g,
                          const uint8_t *object,
                          uint32_t width,
                          uint32_t height,
                          double theta,
                          double opening,
                          double tau,
                          struct GkOutcome *out);

/**
 * Plan one grasp on an object image with the brute-force oracle.
 *
 * # Safety
 * `object` must point to `width * height` bytes; `g` and `out` must be
 * valid pointers.
 */
enum GkStatus gk_plan_oracle(const struct GkGripper *g,
                             const uint8_t *object,
                             uint32_t width,
                             uint32_t height,
                             double tau,
                             struct GkGrasp *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRASPKIT_H */
