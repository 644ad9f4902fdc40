#include <cmath>
#include <vector>

#include "gauss_newton.hpp"
#include "redodom/registration.hpp"

namespace redodom {

namespace {

// Residual d = q - T s with weight (C_q + R C_s R^T)^-1. For the left
// increment (omega, v): d(delta) ~ d + [T s]x omega - v.
class PlaneToPlaneProblem {
public:
    static constexpr std::size_t kMinCorrespondences = 6;

    PlaneToPlaneProblem(const PointCloud &source, const PointCloud &target, const KdTree &index,
                        double max_distance)
        : source_(source), target_(target), index_(index), max_distance_(max_distance) {}

    std::size_t associate(const Pose &pose) {
        pairs_.clear();
        for (std::size_t i = 0; i < source_.size(); ++i) {
            const auto match = index_.nearest_within(pose * source_.points[i], max_distance_);
            if (!match) continue;
            pairs_.push_back({i, match->index});
        }
        return pairs_.size();
    }

    detail::LinearSystem linearize(const Pose &pose) const {
        detail::LinearSystem system;
        for (const auto &[s, t] : pairs_) {
            const Eigen::Vector3d p = pose * source_.points[s];
            const Eigen::Vector3d d = target_.points[t] - p;
            const Eigen::Matrix3d w = weight(pose, s, t);
            Eigen::Matrix<double, 3, 6> j;
            j.leftCols<3>() = skew(p);
            j.rightCols<3>() = -Eigen::Matrix3d::Identity();
            const Eigen::Matrix<double, 6, 3> jt_w = j.transpose() * w;
            system.hessian.noalias() += jt_w * j;
            system.gradient.noalias() += jt_w * d;
            system.objective += d.dot(w * d);
        }
        return system;
    }

    double objective(const Pose &pose) const {
        double sum = 0.0;
        for (const auto &[s, t] : pairs_) {
            const Eigen::Vector3d d = target_.points[t] - pose * source_.points[s];
            sum += d.dot(weight(pose, s, t) * d);
        }
        return sum;
    }

    double residual(double objective) const {
        return pairs_.empty() ? 0.0 : std::sqrt(objective / static_cast<double>(pairs_.size()));
    }

private:
    Eigen::Matrix3d weight(const Pose &pose, std::size_t s, std::size_t t) const {
        const Eigen::Matrix3d combined =
            target_.covariances[t] + pose.rotation * source_.covariances[s] * pose.rotation.transpose();
        return combined.inverse();
    }

    struct Pair {
        std::size_t source;
        std::size_t target;
    };
    const PointCloud &source_;
    const PointCloud &target_;
    const KdTree &index_;
    double max_distance_;
    std::vector<Pair> pairs_;
};

}  // namespace

TransformProposal gicp_estimate(const PointCloud &source, const PointCloud &target,
                                const KdTree &target_index, const Pose &initial_guess,
                                const EstimatorConfig &cfg, IterationLog *log) {
    if (source.empty() || target.empty() || !source.has_covariances() || !target.has_covariances()) {
        return failed_proposal(estimators::kGicp, initial_guess);
    }
    PlaneToPlaneProblem problem(source, target, target_index, cfg.max_correspondence_distance);
    return detail::run_gauss_newton(estimators::kGicp, problem, initial_guess, cfg, log);
}

TransformProposal gicp_estimate(const PointCloud &source, const PointCloud &target,
                                const Pose &initial_guess, const EstimatorConfig &cfg) {
    if (source.empty() || target.empty() || !source.has_covariances() || !target.has_covariances()) {
        return failed_proposal(estimators::kGicp, initial_guess);
    }
    const KdTree index(target.points);
    return gicp_estimate(source, target, index, initial_guess, cfg);
}

}  // namespace redodom
