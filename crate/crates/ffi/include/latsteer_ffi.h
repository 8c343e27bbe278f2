#ifndef LATSTEER_FFI_H
#define LATSTEER_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LatStatus {
  LAT_STATUS_OK = 0,
  LAT_STATUS_NULL_POINTER = 1,
  LAT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Outside the model's domain: untrackable curvature, singularity,
   * failed projection or aborted integration.
   */
  LAT_STATUS_DOMAIN = 3,
  LAT_STATUS_IO = 4,
  LAT_STATUS_CONFIG = 5,
  LAT_STATUS_PANIC = 6,
} LatStatus;

typedef enum LatVariant {
  LAT_VARIANT_FULL = 0,
  LAT_VARIANT_NAIVE = 1,
  LAT_VARIANT_UNWRAPPED = 2,
  LAT_VARIANT_LINEAR = 3,
} LatVariant;

typedef struct LatController LatController;

typedef struct LatPath LatPath;

typedef struct LatResult LatResult;

typedef struct LatScenario LatScenario;

typedef struct LatPose {
  double x;
  double y;
  double heading;
} LatPose;

typedef struct LatPathState {
  double s;
  double e;
  double theta;
} LatPathState;

/**
 * Vehicle geometry and speed. Angles in radians, lengths in metres.
 */
typedef struct LatVehicle {
  double wheelbase;
  /**
   * Distance from the rear axle to the sensor point, positive forward.
   */
  double sensor_offset;
  double max_steer;
  double speed;
} LatVehicle;

typedef struct LatSteering {
  double gamma_des;
  double gamma_ff;
  double gamma_fb;
  double applied;
  double theta0;
} LatSteering;

typedef struct LatStability {
  /**
   * 1 if the linearised loop is asymptotically stable.
   */
  int32_t stable;
  /**
   * 1 if a Routh-Hurwitz quantity is within the boundary tolerance of zero.
   */
  int32_t marginal;
  /**
   * 1 if the gains meet one of the sufficient conditions.
   */
  int32_t sufficient;
  double eig_re[2];
  double eig_im[2];
} LatStability;

typedef struct LatSample {
  double t;
  double s_d;
  double e_d;
  double theta_d;
  double theta_0;
  double theta_hat;
  double gamma_des;
  double gamma_ff;
  double gamma_fb;
  double x_a;
  double y_a;
  double psi;
  double kappa_d;
} LatSample;

typedef struct LatMetrics {
  /**
   * Negative when the deviation never settles.
   */
  double settling_time;
  double steady_e_d;
  double steady_theta_d;
  double steady_gamma_fb;
  double sway_amplitude;
  double overshoot;
  double saturation_fraction;
  double max_abs_gamma_fb;
  size_t sign_changes;
} LatMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *lat_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lat_version(void);

enum LatStatus lat_path_straight(struct LatPath **out_path);

enum LatStatus lat_path_circular(double radius, struct LatPath **out_path);

/**
 * Road whose curvature rises and falls as a raised cosine, `periods` times.
 */
enum LatStatus lat_path_cosine(double kappa_max,
                               double period,
                               uint32_t periods,
                               struct LatPath **out_path);

/**
 * Path from a curvature table; `s` must be strictly increasing.
 */
enum LatStatus lat_path_sampled(const double *s,
                                const double *kappa,
                                size_t len,
                                struct LatPath **out_path);

void lat_path_free(struct LatPath *path);

/**
 * Curvature and its arc-length derivative at `s`.
 */
enum LatStatus lat_path_curvature(const struct LatPath *path,
                                  double s,
                                  double *kappa,
                                  double *kappa_rate);

enum LatStatus lat_path_pose(const struct LatPath *path, double s, struct LatPose *pose);

/**
 * Path-frame coordinates of an earth-frame sensor pose, searching near `s_hint`.
 */
enum LatStatus lat_path_project(const struct LatPath *path,
                                struct LatPose pose,
                                double s_hint,
                                struct LatPathState *state);

enum LatStatus lat_controller_new(struct LatVehicle vehicle,
                                  double k1,
                                  double k2,
                                  double max_lateral_accel,
                                  enum LatVariant variant,
                                  struct LatController **out_ctl);

void lat_controller_free(struct LatController *ctl);

/**
 * Bound applied to the feedback term by the wrapper (rad).
 */
enum LatStatus lat_controller_feedback_bound(const struct LatController *ctl, double *bound);

/**
 * Steering command for the sensor-point state at path curvature `kappa`.
 */
enum LatStatus lat_control(const struct LatController *ctl,
                           struct LatPathState state,
                           double kappa,
                           struct LatSteering *steering);

/**
 * Local stability of the closed loop linearised on a circle of curvature `kappa0`.
 */
enum LatStatus lat_stability(struct LatVehicle vehicle,
                             double kappa0,
                             double k1,
                             double k2,
                             struct LatStability *result);

/**
 * Lateral deviation amplitude per unit curvature amplitude at `omega` (m^2).
 */
enum LatStatus lat_amplification(struct LatVehicle vehicle,
                                 double kappa0,
                                 double k1,
                                 double k2,
                                 double omega,
                                 double *m);

enum LatStatus lat_peak_amplification(struct LatVehicle vehicle,
                                      double kappa0,
                                      double k1,
                                      double k2,
                                      double *m_max,
                                      double *omega_m);

/**
 * Parses a scenario from TOML text. Relative file references resolve
 * against `base_dir`, which may be null.
 */
enum LatStatus lat_scenario_from_toml(const char *text,
                                      const char *base_dir,
                                      struct LatScenario **out_scn);

/**
 * Changes the integration step of a parsed scenario.
 */
enum LatStatus lat_scenario_set_dt(struct LatScenario *scn, double dt);

void lat_scenario_free(struct LatScenario *scn);

enum LatStatus lat_scenario_run(const struct LatScenario *scn, struct LatResult **out_res);

void lat_result_free(struct LatResult *res);

/**
 * Number of trajectory samples, including the initial state.
 */
enum LatStatus lat_result_len(const struct LatResult *res, size_t *len);

enum LatStatus lat_result_sample(const struct LatResult *res,
                                 size_t index,
                                 struct LatSample *sample);

enum LatStatus lat_result_metrics(const struct LatResult *res, struct LatMetrics *metrics);

/**
 * Largest earth/path disagreement in metres, or a negative value when the
 * scenario ran in a single frame.
 */
enum LatStatus lat_result_cross_check(const struct LatResult *res, double *max_position_error);

enum LatStatus lat_result_write_csv(const struct LatResult *res, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATSTEER_FFI_H */
