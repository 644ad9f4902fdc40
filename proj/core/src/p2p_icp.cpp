#include <cmath>
#include <vector>

#include "gauss_newton.hpp"
#include "redodom/registration.hpp"

namespace redodom {

namespace {

// Point-to-plane residual r = (T s - q) . n_q, linearized for the
// left increment (omega, v): J = [ (T s) x n, n ].
class PointToPlaneProblem {
public:
    static constexpr std::size_t kMinCorrespondences = 6;

    PointToPlaneProblem(const PointCloud &source, const PointCloud &target, const KdTree &index,
                        double max_distance)
        : source_(source), target_(target), index_(index), max_distance_(max_distance) {}

    std::size_t associate(const Pose &pose) {
        pairs_.clear();
        for (std::size_t i = 0; i < source_.size(); ++i) {
            const auto match = index_.nearest_within(pose * source_.points[i], max_distance_);
            if (!match || !target_.normal_valid[match->index]) continue;
            pairs_.push_back({i, match->index});
        }
        return pairs_.size();
    }

    detail::LinearSystem linearize(const Pose &pose) const {
        detail::LinearSystem system;
        for (const auto &[s, t] : pairs_) {
            const Eigen::Vector3d p = pose * source_.points[s];
            const Eigen::Vector3d &n = target_.normals[t];
            const double r = (p - target_.points[t]).dot(n);
            Vector6d j;
            j.head<3>() = p.cross(n);
            j.tail<3>() = n;
            system.hessian.noalias() += j * j.transpose();
            system.gradient.noalias() += j * r;
            system.objective += r * r;
        }
        return system;
    }

    double objective(const Pose &pose) const {
        double sum = 0.0;
        for (const auto &[s, t] : pairs_) {
            const double r = (pose * source_.points[s] - target_.points[t]).dot(target_.normals[t]);
            sum += r * r;
        }
        return sum;
    }

    double residual(double objective) const {
        return pairs_.empty() ? 0.0 : std::sqrt(objective / static_cast<double>(pairs_.size()));
    }

private:
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

TransformProposal p2p_icp_estimate(const PointCloud &source, const PointCloud &target,
                                   const KdTree &target_index, const Pose &initial_guess,
                                   const EstimatorConfig &cfg, IterationLog *log) {
    if (source.empty() || target.empty() || !target.has_normals()) {
        return failed_proposal(estimators::kP2PIcp, initial_guess);
    }
    PointToPlaneProblem problem(source, target, target_index, cfg.max_correspondence_distance);
    return detail::run_gauss_newton(estimators::kP2PIcp, problem, initial_guess, cfg, log);
}

TransformProposal p2p_icp_estimate(const PointCloud &source, const PointCloud &target,
                                   const Pose &initial_guess, const EstimatorConfig &cfg) {
    if (source.empty() || target.empty() || !target.has_normals()) {
        return failed_proposal(estimators::kP2PIcp, initial_guess);
    }
    const KdTree index(target.points);
    return p2p_icp_estimate(source, target, index, initial_guess, cfg);
}

}  // namespace redodom
