#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "gauss_newton.hpp"
#include "redodom/registration.hpp"

namespace redodom {

namespace detail {

namespace {
constexpr double kDamping = 1e-6;
constexpr double kConditionFloor = 1e-12;

bool is_singular(const Matrix6d &m) {
    Eigen::SelfAdjointEigenSolver<Matrix6d> solver(m, Eigen::EigenvaluesOnly);
    const auto &ev = solver.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    return !(largest > 0.0) || !std::isfinite(largest) || ev[0] <= kConditionFloor * largest;
}
}  // namespace

std::optional<Vector6d> solve_normal_equations(const Matrix6d &hessian, const Vector6d &gradient) {
    if (!gradient.allFinite() || !hessian.allFinite()) return std::nullopt;
    Matrix6d h = hessian;
    if (is_singular(h)) {
        h += kDamping * Matrix6d::Identity();
        if (is_singular(h)) return std::nullopt;
    }
    Vector6d step = h.ldlt().solve(-gradient);
    if (!step.allFinite()) return std::nullopt;
    return step;
}

}  // namespace detail

std::string_view to_string(SanityVerdict verdict) {
    switch (verdict) {
        case SanityVerdict::untested: return "untested";
        case SanityVerdict::passed: return "passed";
        case SanityVerdict::rejected_dynamic: return "rejected_dynamic";
        case SanityVerdict::rejected_kinematic: return "rejected_kinematic";
    }
    return "untested";
}

SanityVerdict verdict_from_string(std::string_view name) {
    for (auto v : {SanityVerdict::untested, SanityVerdict::passed, SanityVerdict::rejected_dynamic,
                   SanityVerdict::rejected_kinematic}) {
        if (to_string(v) == name) return v;
    }
    throw std::invalid_argument("unknown sanity verdict '" + std::string(name) + "'");
}

void EstimatorConfig::validate() const {
    auto require = [](bool ok, const char *field) {
        if (!ok) throw std::invalid_argument(std::string("estimator config: ") + field + " must be positive");
    };
    require(max_iterations > 0, "max_iterations");
    require(convergence_translation > 0.0, "convergence_translation");
    require(convergence_rotation > 0.0, "convergence_rotation");
    require(max_correspondence_distance > 0.0, "max_correspondence_distance");
    require(ndt_cell_size > 0.0, "ndt_cell_size");
    require(ndt_outlier_ratio > 0.0 && ndt_outlier_ratio < 1.0, "ndt_outlier_ratio (and < 1)");
    require(gicp_epsilon > 0.0, "gicp_epsilon");
    require(normal_neighbors >= 3, "normal_neighbors (and >= 3)");
    require(covariance_neighbors >= 4, "covariance_neighbors (and >= 4)");
}

TransformProposal failed_proposal(std::string_view method, const Pose &initial_guess) {
    TransformProposal p;
    p.method = std::string(method);
    p.transform = initial_guess;
    p.converged = false;
    return p;
}

PreparedScan prepare_scan(PointCloud cloud, const EstimatorConfig &cfg) {
    PreparedScan scan;
    if (cloud.empty()) {
        scan.cloud = std::move(cloud);
        return scan;
    }
    if (cloud.size() >= static_cast<std::size_t>(cfg.normal_neighbors)) {
        cloud = estimate_normals(cloud, cfg.normal_neighbors);
    }
    if (cloud.size() >= static_cast<std::size_t>(cfg.covariance_neighbors)) {
        cloud = estimate_covariances(cloud, cfg.covariance_neighbors, cfg.gicp_epsilon);
    }
    scan.index = std::make_shared<const KdTree>(cloud.points);
    scan.ndt_grid = std::make_shared<const NdtGrid>(cloud, cfg.ndt_cell_size);
    scan.cloud = std::move(cloud);
    return scan;
}

namespace {

bool usable(const PreparedScan *scan) { return scan != nullptr && !scan->empty() && scan->index; }

class P2PIcpEstimator final : public Estimator {
public:
    EstimatorId id() const override { return std::string(estimators::kP2PIcp); }
    TransformProposal estimate(const FrameInputs &frame, const Pose &guess,
                               const EstimatorConfig &cfg) const override {
        if (!usable(frame.source) || !usable(frame.target) || !frame.target->cloud.has_normals()) {
            return failed_proposal(estimators::kP2PIcp, guess);
        }
        return p2p_icp_estimate(frame.source->cloud, frame.target->cloud, *frame.target->index, guess,
                                cfg);
    }
};

class GicpEstimator final : public Estimator {
public:
    EstimatorId id() const override { return std::string(estimators::kGicp); }
    TransformProposal estimate(const FrameInputs &frame, const Pose &guess,
                               const EstimatorConfig &cfg) const override {
        if (!usable(frame.source) || !usable(frame.target) ||
            !frame.source->cloud.has_covariances() || !frame.target->cloud.has_covariances()) {
            return failed_proposal(estimators::kGicp, guess);
        }
        return gicp_estimate(frame.source->cloud, frame.target->cloud, *frame.target->index, guess,
                             cfg);
    }
};

class NdtEstimator final : public Estimator {
public:
    EstimatorId id() const override { return std::string(estimators::kNdt); }
    TransformProposal estimate(const FrameInputs &frame, const Pose &guess,
                               const EstimatorConfig &cfg) const override {
        if (!usable(frame.source) || !usable(frame.target) || !frame.target->ndt_grid) {
            return failed_proposal(estimators::kNdt, guess);
        }
        return ndt_estimate(frame.source->cloud, *frame.target->ndt_grid, guess, cfg);
    }
};

class CvmEstimator final : public Estimator {
public:
    EstimatorId id() const override { return std::string(estimators::kCvm); }
    TransformProposal estimate(const FrameInputs &frame, const Pose &,
                               const EstimatorConfig &) const override {
        if (frame.history == nullptr) return cvm_estimate(OdometryHistory{});
        return cvm_estimate(*frame.history);
    }
};

}  // namespace

std::shared_ptr<const Estimator> make_estimator(std::string_view id) {
    if (id == estimators::kP2PIcp) return std::make_shared<P2PIcpEstimator>();
    if (id == estimators::kGicp) return std::make_shared<GicpEstimator>();
    if (id == estimators::kNdt) return std::make_shared<NdtEstimator>();
    if (id == estimators::kCvm) return std::make_shared<CvmEstimator>();
    if (id == estimators::kHuang || id == estimators::kColorIcp) {
        throw std::invalid_argument("estimator '" + std::string(id) +
                                    "' needs camera input and has no built-in implementation");
    }
    throw std::invalid_argument("unknown estimator '" + std::string(id) + "'");
}

TransformProposal cvm_estimate(const OdometryHistory &history) {
    TransformProposal p;
    p.method = std::string(estimators::kCvm);
    p.transform = history.empty() ? Pose::Identity() : history.relative_transforms().back();
    p.converged = true;
    p.iterations = 0;
    p.residual = 0.0;
    return p;
}

}  // namespace redodom
