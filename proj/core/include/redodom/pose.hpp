#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace redodom {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Rigid transform in SE(3). Maps a point x to rotation * x + translation.
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Pose Identity() { return {}; }
    static Pose FromMatrix(const Eigen::Matrix4d &m);
    static Pose FromTranslation(const Eigen::Vector3d &t);
    static Pose FromYaw(double yaw, const Eigen::Vector3d &t = Eigen::Vector3d::Zero());
    static Pose FromAxisAngle(const Eigen::Vector3d &rotation_vector,
                              const Eigen::Vector3d &t = Eigen::Vector3d::Zero());

    /// Left-multiplicative increment used by the Gauss-Newton solvers:
    /// twist = (omega, v), result maps x to Exp(omega) * x + v.
    static Pose FromIncrement(const Vector6d &twist);

    Eigen::Matrix4d matrix() const;
    Pose inverse() const;

    Eigen::Vector3d operator*(const Eigen::Vector3d &x) const { return rotation * x + translation; }

    /// Rotation about the sensor z-axis, in radians.
    double yaw() const;
    /// Angle of the rotation, in [0, pi].
    double rotation_angle() const;
};

/// compose(a, b) applies b first, then a. Rotation drift beyond 1e-9 is
/// repaired by orthonormal projection.
Pose compose(const Pose &a, const Pose &b);
inline Pose operator*(const Pose &a, const Pose &b) { return compose(a, b); }

/// max |R^T R - I|
double orthonormality_error(const Eigen::Matrix3d &rotation);

/// Nearest rotation matrix (polar decomposition via SVD).
Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d &m);

Eigen::Matrix3d skew(const Eigen::Vector3d &v);

}  // namespace redodom
