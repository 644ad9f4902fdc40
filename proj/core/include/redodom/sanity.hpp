#pragma once

#include <optional>

#include "redodom/history.hpp"
#include "redodom/pose.hpp"
#include "redodom/registration.hpp"

namespace redodom {

/// Vehicle limits for the plausibility checks.
struct VehicleModel {
    double l = 1.0;      // rear axle to sensor [m]
    double a_max = 6.0;  // admissible acceleration [m/s^2]
    double v_th = 0.8;   // admissible side-velocity deviation [m/s]

    /// Throws std::invalid_argument unless all fields are positive.
    void validate() const;
};

/// Kinematic quantities of one proposal against the selected history.
struct KinematicState {
    double v = 0.0;          // forward velocity from the last selected transform [m/s]
    double beta_dot = 0.0;   // turning rate of the proposal [rad/s]
    double v_star = 0.0;     // lateral velocity of the proposal [m/s]
    double f = 0.0;          // frame rate [Hz]
    double delta_tau = 0.0;  // inter-frame time [s]
    double v_s = 0.0;        // Ackermann side velocity for (beta_dot, v)
};

/// |speed_new - speed_prev| / delta_tau with speeds from translation norms.
double estimate_acceleration(const Pose &prev_transform, double prev_delta_tau, const Pose &proposal,
                             double delta_tau);

/// Max-acceleration check. Passes when there is no previous transform.
/// Throws std::invalid_argument if delta_tau <= 0.
SanityVerdict check_acceleration(const std::optional<Pose> &prev_transform, double prev_delta_tau,
                                 const Pose &proposal, double delta_tau, const VehicleModel &model);

/// check_acceleration against the last selected transform of the history.
SanityVerdict check_acceleration(const Pose &proposal, const OdometryHistory &history,
                                 double delta_tau, const VehicleModel &model);

/// Lateral velocity of a sensor mounted l ahead of the rear axle:
///   v_s = f [ (v/f + l(1 - cos b)) / sin b * (1 - cos b) + l sin b ],  b = beta_dot / f
/// For |b| < 1e-8 the limit l * beta_dot is returned.
double ackermann_side_velocity(double beta_dot, double v, const VehicleModel &model, double f);

/// Evaluates (v, beta_dot, v*, v_s) for a proposal. Requires history with
/// at least two frames and delta_tau > 0.
KinematicState kinematic_state(const Pose &proposal, const OdometryHistory &history,
                               double delta_tau, const VehicleModel &model);

/// Ackermann side-velocity check: rejected_kinematic iff |v_s - v*| > v_th.
/// Passes on a history without motion (first frames).
SanityVerdict check_kinematics(const Pose &proposal, const OdometryHistory &history,
                               double delta_tau, const VehicleModel &model);

/// Dynamic then kinematic check.
SanityVerdict run_sanity_checks(const Pose &proposal, const OdometryHistory &history,
                                double delta_tau, const VehicleModel &model);

}  // namespace redodom
