#include "redodom/sanity.hpp"

#include <cmath>
#include <stdexcept>

namespace redodom {

namespace {
constexpr double kSmallAngle = 1e-8;

void require_positive_interval(double delta_tau) {
    if (!(delta_tau > 0.0)) throw std::invalid_argument("delta_tau must be positive");
}
}  // namespace

void VehicleModel::validate() const {
    if (!(l > 0.0) || !(a_max > 0.0) || !(v_th > 0.0)) {
        throw std::invalid_argument("vehicle model: l, a_max and v_th must be positive");
    }
}

double estimate_acceleration(const Pose &prev_transform, double prev_delta_tau, const Pose &proposal,
                             double delta_tau) {
    const double speed_prev = prev_transform.translation.norm() / prev_delta_tau;
    const double speed_new = proposal.translation.norm() / delta_tau;
    return std::abs(speed_new - speed_prev) / delta_tau;
}

SanityVerdict check_acceleration(const std::optional<Pose> &prev_transform, double prev_delta_tau,
                                 const Pose &proposal, double delta_tau, const VehicleModel &model) {
    require_positive_interval(delta_tau);
    if (!prev_transform || !(prev_delta_tau > 0.0)) return SanityVerdict::passed;
    const double accel = estimate_acceleration(*prev_transform, prev_delta_tau, proposal, delta_tau);
    return accel > model.a_max ? SanityVerdict::rejected_dynamic : SanityVerdict::passed;
}

SanityVerdict check_acceleration(const Pose &proposal, const OdometryHistory &history,
                                 double delta_tau, const VehicleModel &model) {
    return check_acceleration(history.last_motion(), history.last_interval().value_or(0.0), proposal,
                              delta_tau, model);
}

double ackermann_side_velocity(double beta_dot, double v, const VehicleModel &model, double f) {
    if (!(f > 0.0)) throw std::invalid_argument("frame rate must be positive");
    const double b = beta_dot / f;
    if (std::abs(b) < kSmallAngle) return model.l * beta_dot;
    const double one_minus_cos = 1.0 - std::cos(b);
    const double sin_b = std::sin(b);
    const double radius = (v / f + model.l * one_minus_cos) / sin_b;
    return f * (radius * one_minus_cos + model.l * sin_b);
}

KinematicState kinematic_state(const Pose &proposal, const OdometryHistory &history,
                               double delta_tau, const VehicleModel &model) {
    require_positive_interval(delta_tau);
    const auto last = history.last_motion();
    const auto last_dt = history.last_interval();
    if (!last || !last_dt || !(*last_dt > 0.0)) {
        throw std::invalid_argument("kinematic state needs two frames of history");
    }
    KinematicState s;
    s.delta_tau = delta_tau;
    s.f = 1.0 / delta_tau;
    s.v = last->translation.x() / *last_dt;
    s.beta_dot = proposal.yaw() / delta_tau;
    s.v_star = proposal.translation.y() / delta_tau;
    s.v_s = ackermann_side_velocity(s.beta_dot, s.v, model, s.f);
    return s;
}

SanityVerdict check_kinematics(const Pose &proposal, const OdometryHistory &history,
                               double delta_tau, const VehicleModel &model) {
    require_positive_interval(delta_tau);
    const auto last_dt = history.last_interval();
    if (!history.last_motion() || !last_dt || !(*last_dt > 0.0)) return SanityVerdict::passed;
    const KinematicState s = kinematic_state(proposal, history, delta_tau, model);
    return std::abs(s.v_s - s.v_star) > model.v_th ? SanityVerdict::rejected_kinematic
                                                   : SanityVerdict::passed;
}

SanityVerdict run_sanity_checks(const Pose &proposal, const OdometryHistory &history,
                                double delta_tau, const VehicleModel &model) {
    const SanityVerdict dynamic = check_acceleration(proposal, history, delta_tau, model);
    if (dynamic != SanityVerdict::passed) return dynamic;
    return check_kinematics(proposal, history, delta_tau, model);
}

}  // namespace redodom
