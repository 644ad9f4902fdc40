#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "redodom/history.hpp"
#include "redodom/kdtree.hpp"
#include "redodom/point_cloud.hpp"
#include "redodom/pose.hpp"

namespace redodom {

/// Short estimator name, unique within a pipeline configuration.
using EstimatorId = std::string;

namespace estimators {
inline constexpr std::string_view kP2PIcp = "p2p_icp";
inline constexpr std::string_view kGicp = "gicp";
inline constexpr std::string_view kNdt = "ndt";
inline constexpr std::string_view kCvm = "cvm";
// Reserved for camera-based plug-ins; no built-in implementation.
inline constexpr std::string_view kHuang = "huang";
inline constexpr std::string_view kColorIcp = "color_icp";
}  // namespace estimators

enum class SanityVerdict { untested, passed, rejected_dynamic, rejected_kinematic };

std::string_view to_string(SanityVerdict verdict);
/// Throws std::invalid_argument on an unknown name.
SanityVerdict verdict_from_string(std::string_view name);

struct TransformProposal {
    EstimatorId method;
    Pose transform;  // current scan frame -> previous scan frame
    bool converged = false;
    int iterations = 0;
    // Final objective value. p2p_icp: RMS point-to-plane distance [m];
    // gicp: mean Mahalanobis distance [m / sigma]; ndt: mean negative
    // cell likelihood score [-]; cvm: 0.
    double residual = 0.0;
    SanityVerdict sanity = SanityVerdict::untested;
    std::optional<double> chamfer;  // set only when sanity == passed
};

struct EstimatorConfig {
    int max_iterations = 30;
    double convergence_translation = 1e-4;  // m
    double convergence_rotation = 1e-4;     // rad
    double max_correspondence_distance = 1.0;  // m
    double ndt_cell_size = 1.0;  // m
    double ndt_outlier_ratio = 0.55;
    double gicp_epsilon = 1e-3;
    int normal_neighbors = 20;
    int covariance_neighbors = 20;

    /// Throws std::invalid_argument if any field is non-positive.
    void validate() const;
};

/// Per-iteration record of an ICP-family solve, for diagnostics and tests.
/// objective_before/after are evaluated on the same correspondence set.
struct IterationLog {
    std::vector<Pose> iterates;
    std::vector<double> objective_before;
    std::vector<double> objective_after;
    std::vector<std::size_t> correspondences;
};

/// Gaussian over one occupied target cell.
struct NdtCell {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
    std::size_t count = 0;
};

/// Voxel grid of per-cell Gaussians over a target cloud. Cells with fewer
/// than kMinPoints points are excluded; covariance eigenvalues are floored
/// at 1e-3 of the largest.
class NdtGrid {
public:
    static constexpr std::size_t kMinPoints = 5;

    NdtGrid(const PointCloud &target, double cell_size);

    double cell_size() const { return cell_size_; }
    std::size_t cell_count() const { return cells_.size(); }
    /// The cell containing p, or nullptr if that cell is absent or excluded.
    const NdtCell *lookup(const Eigen::Vector3d &p) const;

private:
    struct Key {
        long long x, y, z;
        bool operator==(const Key &) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key &k) const;
    };
    Key key_of(const Eigen::Vector3d &p) const;

    double cell_size_;
    std::unordered_map<Key, NdtCell, KeyHash> cells_;
};

/// A voxelized scan with everything the estimators share: normals,
/// covariances, spatial index and NDT grid. Built once per frame and used as
/// the source on that frame and as the target on the next.
struct PreparedScan {
    PointCloud cloud;
    std::shared_ptr<const KdTree> index;
    std::shared_ptr<const NdtGrid> ndt_grid;

    bool empty() const { return cloud.empty(); }
};

/// Adds whatever surface features the cloud size allows. Clouds too small
/// for the neighborhood sizes are returned without normals/covariances.
PreparedScan prepare_scan(PointCloud cloud, const EstimatorConfig &cfg);

/// A failed proposal: converged = false, transform = initial guess.
TransformProposal failed_proposal(std::string_view method, const Pose &initial_guess);

/// Point-to-plane ICP. Target must carry valid normals.
TransformProposal p2p_icp_estimate(const PointCloud &source, const PointCloud &target,
                                   const KdTree &target_index, const Pose &initial_guess,
                                   const EstimatorConfig &cfg, IterationLog *log = nullptr);
TransformProposal p2p_icp_estimate(const PointCloud &source, const PointCloud &target,
                                   const Pose &initial_guess, const EstimatorConfig &cfg);

/// Generalized ICP (plane-to-plane). Both clouds must carry covariances.
TransformProposal gicp_estimate(const PointCloud &source, const PointCloud &target,
                                const KdTree &target_index, const Pose &initial_guess,
                                const EstimatorConfig &cfg, IterationLog *log = nullptr);
TransformProposal gicp_estimate(const PointCloud &source, const PointCloud &target,
                                const Pose &initial_guess, const EstimatorConfig &cfg);

/// Normal distributions transform, point-to-distribution with single-cell
/// lookup.
TransformProposal ndt_estimate(const PointCloud &source, const NdtGrid &grid,
                               const Pose &initial_guess, const EstimatorConfig &cfg,
                               IterationLog *log = nullptr);
TransformProposal ndt_estimate(const PointCloud &source, const PointCloud &target,
                               const Pose &initial_guess, const EstimatorConfig &cfg);

/// Constant velocity model: repeats the last selected transform.
TransformProposal cvm_estimate(const OdometryHistory &history);

/// Everything an estimator may look at for one frame. Pointers are never
/// null; scans may be empty (e.g. no target on the first frame).
struct FrameInputs {
    std::size_t frame_index = 0;
    const PreparedScan *source = nullptr;
    const PreparedScan *target = nullptr;
    const OdometryHistory *history = nullptr;
};

/// Plug-in interface. estimate() must be a pure function of its arguments
/// and must report failures as proposals rather than throwing.
class Estimator {
public:
    virtual ~Estimator() = default;
    virtual EstimatorId id() const = 0;
    virtual TransformProposal estimate(const FrameInputs &frame, const Pose &initial_guess,
                                       const EstimatorConfig &cfg) const = 0;
};

/// Built-in estimator by name. Throws std::invalid_argument for unknown or
/// reserved-but-unimplemented names.
std::shared_ptr<const Estimator> make_estimator(std::string_view id);

}  // namespace redodom
