#include "redodom/pose.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace redodom {

namespace {
constexpr double kDriftTolerance = 1e-9;
}

Pose Pose::FromMatrix(const Eigen::Matrix4d &m) {
    Pose p;
    p.rotation = m.topLeftCorner<3, 3>();
    p.translation = m.topRightCorner<3, 1>();
    return p;
}

Pose Pose::FromTranslation(const Eigen::Vector3d &t) {
    Pose p;
    p.translation = t;
    return p;
}

Pose Pose::FromYaw(double yaw, const Eigen::Vector3d &t) {
    Pose p;
    p.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    p.translation = t;
    return p;
}

Pose Pose::FromAxisAngle(const Eigen::Vector3d &rotation_vector, const Eigen::Vector3d &t) {
    Pose p;
    const double angle = rotation_vector.norm();
    if (angle > 0.0) {
        p.rotation = Eigen::AngleAxisd(angle, rotation_vector / angle).toRotationMatrix();
    }
    p.translation = t;
    return p;
}

Pose Pose::FromIncrement(const Vector6d &twist) {
    return FromAxisAngle(twist.head<3>(), twist.tail<3>());
}

Eigen::Matrix4d Pose::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

Pose Pose::inverse() const {
    Pose p;
    p.rotation = rotation.transpose();
    p.translation = -(p.rotation * translation);
    return p;
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

double Pose::rotation_angle() const {
    // atan2 of the sine (from the skew part) and cosine (from the trace):
    // the same angle as acos((tr - 1) / 2) but accurate near zero.
    const Eigen::Vector3d skew(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                               rotation(1, 0) - rotation(0, 1));
    return std::atan2(0.5 * skew.norm(), 0.5 * (rotation.trace() - 1.0));
}

double orthonormality_error(const Eigen::Matrix3d &rotation) {
    return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d &m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

Pose compose(const Pose &a, const Pose &b) {
    Pose p;
    p.rotation = a.rotation * b.rotation;
    p.translation = a.rotation * b.translation + a.translation;
    if (orthonormality_error(p.rotation) > kDriftTolerance) {
        p.rotation = project_to_rotation(p.rotation);
    }
    return p;
}

Eigen::Matrix3d skew(const Eigen::Vector3d &v) {
    Eigen::Matrix3d s;
    s << 0.0, -v.z(), v.y(),   //
        v.z(), 0.0, -v.x(),    //
        -v.y(), v.x(), 0.0;
    return s;
}

}  // namespace redodom
