#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gauss_newton.hpp"
#include "redodom/registration.hpp"

namespace redodom {

namespace {

constexpr double kEigenvalueFloor = 1e-3;

// Mixture constants of the point-to-distribution score
// s(x) = -d1 * exp(-d2 / 2 * x^T S^-1 x), Gaussian plus uniform outliers.
struct ScoreConstants {
    double d1;
    double d2;
};

ScoreConstants score_constants(double cell_size, double outlier_ratio) {
    const double c1 = 10.0 * (1.0 - outlier_ratio);
    const double c2 = outlier_ratio / (cell_size * cell_size * cell_size);
    const double d3 = -std::log(c2);
    const double d1 = -std::log(c1 + c2) - d3;
    const double d2 = -2.0 * std::log((-std::log(c1 * std::exp(-0.5) + c2) - d3) / d1);
    return {d1, d2};
}

// Minimizes sum d1 * exp(-d2/2 * q), q = (T s - mu)^T S^-1 (T s - mu), by
// iteratively reweighted Gauss-Newton on the fixed point-to-cell assignment.
class PointToDistributionProblem {
public:
    static constexpr std::size_t kMinCorrespondences = 6;

    PointToDistributionProblem(const PointCloud &source, const NdtGrid &grid, ScoreConstants k)
        : source_(source), grid_(grid), k_(k) {}

    std::size_t associate(const Pose &pose) {
        pairs_.clear();
        for (std::size_t i = 0; i < source_.size(); ++i) {
            const NdtCell *cell = grid_.lookup(pose * source_.points[i]);
            if (cell != nullptr) pairs_.push_back({i, cell});
        }
        return pairs_.size();
    }

    detail::LinearSystem linearize(const Pose &pose) const {
        detail::LinearSystem system;
        for (const auto &[s, cell] : pairs_) {
            const Eigen::Vector3d p = pose * source_.points[s];
            const Eigen::Vector3d x = p - cell->mean;
            const Eigen::Vector3d info_x = cell->information * x;
            const double q = x.dot(info_x);
            const double e = std::exp(-0.5 * k_.d2 * q);
            // d/dq of d1 * exp(-d2 q / 2), positive.
            const double weight = -0.5 * k_.d1 * k_.d2 * e;
            Eigen::Matrix<double, 3, 6> j;
            j.leftCols<3>() = -skew(p);
            j.rightCols<3>() = Eigen::Matrix3d::Identity();
            const Eigen::Matrix<double, 6, 3> jt_info = j.transpose() * cell->information;
            system.hessian.noalias() += (2.0 * weight) * (jt_info * j);
            system.gradient.noalias() += (2.0 * weight) * (j.transpose() * info_x);
            system.objective += k_.d1 * e;
        }
        return system;
    }

    double objective(const Pose &pose) const {
        double sum = 0.0;
        for (const auto &[s, cell] : pairs_) {
            const Eigen::Vector3d x = pose * source_.points[s] - cell->mean;
            sum += k_.d1 * std::exp(-0.5 * k_.d2 * x.dot(cell->information * x));
        }
        return sum;
    }

    double residual(double objective) const {
        return pairs_.empty() ? 0.0 : objective / static_cast<double>(pairs_.size());
    }

private:
    struct Pair {
        std::size_t source;
        const NdtCell *cell;
    };
    const PointCloud &source_;
    const NdtGrid &grid_;
    ScoreConstants k_;
    std::vector<Pair> pairs_;
};

}  // namespace

std::size_t NdtGrid::KeyHash::operator()(const Key &k) const {
    return static_cast<std::size_t>(k.x * 73856093LL) ^ static_cast<std::size_t>(k.y * 19349669LL) ^
           static_cast<std::size_t>(k.z * 83492791LL);
}

NdtGrid::Key NdtGrid::key_of(const Eigen::Vector3d &p) const {
    return {static_cast<long long>(std::floor(p.x() / cell_size_)),
            static_cast<long long>(std::floor(p.y() / cell_size_)),
            static_cast<long long>(std::floor(p.z() / cell_size_))};
}

NdtGrid::NdtGrid(const PointCloud &target, double cell_size) : cell_size_(cell_size) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("NDT cell size must be positive");
    std::unordered_map<Key, std::vector<std::size_t>, KeyHash> members;
    for (std::size_t i = 0; i < target.size(); ++i) members[key_of(target.points[i])].push_back(i);

    for (const auto &[key, indices] : members) {
        if (indices.size() < kMinPoints) continue;
        NdtCell cell;
        cell.count = indices.size();
        for (std::size_t i : indices) cell.mean += target.points[i];
        cell.mean /= static_cast<double>(indices.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (std::size_t i : indices) {
            const Eigen::Vector3d d = target.points[i] - cell.mean;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(indices.size() - 1);

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
        Eigen::Vector3d ev = solver.eigenvalues();
        const double largest = ev.maxCoeff();
        if (!(largest > 0.0)) continue;
        ev = ev.cwiseMax(kEigenvalueFloor * largest);
        const Eigen::Matrix3d &u = solver.eigenvectors();
        cell.covariance = u * ev.asDiagonal() * u.transpose();
        cell.information = u * ev.cwiseInverse().asDiagonal() * u.transpose();
        cells_.emplace(key, cell);
    }
}

const NdtCell *NdtGrid::lookup(const Eigen::Vector3d &p) const {
    const auto it = cells_.find(key_of(p));
    return it == cells_.end() ? nullptr : &it->second;
}

TransformProposal ndt_estimate(const PointCloud &source, const NdtGrid &grid,
                               const Pose &initial_guess, const EstimatorConfig &cfg,
                               IterationLog *log) {
    if (source.empty() || grid.cell_count() == 0) {
        return failed_proposal(estimators::kNdt, initial_guess);
    }
    PointToDistributionProblem problem(source, grid,
                                       score_constants(grid.cell_size(), cfg.ndt_outlier_ratio));
    return detail::run_gauss_newton(estimators::kNdt, problem, initial_guess, cfg, log);
}

TransformProposal ndt_estimate(const PointCloud &source, const PointCloud &target,
                               const Pose &initial_guess, const EstimatorConfig &cfg) {
    if (source.empty() || target.empty()) return failed_proposal(estimators::kNdt, initial_guess);
    const NdtGrid grid(target, cfg.ndt_cell_size);
    return ndt_estimate(source, grid, initial_guess, cfg);
}

}  // namespace redodom
