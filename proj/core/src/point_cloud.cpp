#include "redodom/point_cloud.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "redodom/kdtree.hpp"

namespace redodom {

namespace {

// Second-largest scatter eigenvalue below this fraction of the largest
// means the neighborhood is (numerically) a line or a point.
constexpr double kRankTolerance = 1e-9;

struct VoxelKey {
    std::int64_t x, y, z;
    bool operator==(const VoxelKey &) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey &k) const {
        return static_cast<std::size_t>(k.x * 73856093) ^ static_cast<std::size_t>(k.y * 19349669) ^
               static_cast<std::size_t>(k.z * 83492791);
    }
};

VoxelKey voxel_of(const Eigen::Vector3d &p, double voxel_size) {
    return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
            static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
            static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

struct LocalFrame {
    Eigen::Matrix3d eigenvectors;  // columns, ascending eigenvalue
    Eigen::Vector3d eigenvalues;
    bool degenerate = true;
};

LocalFrame local_frame(const PointCloud &cloud, const KdTree &index, std::size_t i, int k) {
    const auto neighbors = index.knn(cloud.points[i], static_cast<std::size_t>(k));
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto &n : neighbors) mean += cloud.points[n.index];
    mean /= static_cast<double>(neighbors.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto &n : neighbors) {
        const Eigen::Vector3d d = cloud.points[n.index] - mean;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
    LocalFrame frame;
    frame.eigenvectors = solver.eigenvectors();
    frame.eigenvalues = solver.eigenvalues();
    const double largest = frame.eigenvalues[2];
    frame.degenerate = !(largest > 0.0) || frame.eigenvalues[1] <= kRankTolerance * largest;
    return frame;
}

void check_neighbor_count(const PointCloud &cloud, int k, int minimum) {
    if (k < minimum) {
        throw std::invalid_argument("neighborhood size k must be >= " + std::to_string(minimum));
    }
    if (cloud.size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("cloud has fewer points than the neighborhood size k");
    }
}

}  // namespace

PointCloud apply(const Pose &pose, const PointCloud &cloud) {
    PointCloud out = cloud;
    for (auto &p : out.points) p = pose.rotation * p + pose.translation;
    for (auto &n : out.normals) n = pose.rotation * n;
    for (auto &c : out.covariances) c = pose.rotation * c * pose.rotation.transpose();
    return out;
}

PointCloud voxel_downsample(const PointCloud &cloud, double voxel_size) {
    if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_size must be positive");
    PointCloud out;
    out.timestamp = cloud.timestamp;
    std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slots;
    slots.reserve(cloud.size());
    std::vector<std::size_t> counts;
    for (const auto &p : cloud.points) {
        const auto [it, inserted] = slots.try_emplace(voxel_of(p, voxel_size), out.points.size());
        if (inserted) {
            out.points.push_back(p);
            counts.push_back(1);
        } else {
            out.points[it->second] += p;
            ++counts[it->second];
        }
    }
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (counts[i] > 1) out.points[i] /= static_cast<double>(counts[i]);
    }
    return out;
}

PointCloud estimate_normals(const PointCloud &cloud, int k) {
    check_neighbor_count(cloud, k, 3);
    const KdTree index(cloud.points);
    PointCloud out = cloud;
    out.normals.assign(cloud.size(), Eigen::Vector3d::Zero());
    out.normal_valid.assign(cloud.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const LocalFrame frame = local_frame(cloud, index, i, k);
        if (frame.degenerate) continue;
        Eigen::Vector3d n = frame.eigenvectors.col(0).normalized();
        if (n.dot(-cloud.points[i]) < 0.0) n = -n;
        out.normals[i] = n;
        out.normal_valid[i] = 1;
    }
    return out;
}

PointCloud estimate_covariances(const PointCloud &cloud, int k, double epsilon) {
    check_neighbor_count(cloud, k, 4);
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const KdTree index(cloud.points);
    PointCloud out = cloud;
    out.covariances.assign(cloud.size(), Eigen::Matrix3d::Identity());
    out.covariance_valid.assign(cloud.size(), 0);
    const Eigen::Vector3d plane_model(epsilon, 1.0, 1.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const LocalFrame frame = local_frame(cloud, index, i, k);
        if (frame.degenerate) continue;
        const Eigen::Matrix3d &u = frame.eigenvectors;
        Eigen::Matrix3d c = u * plane_model.asDiagonal() * u.transpose();
        out.covariances[i] = 0.5 * (c + c.transpose());
        out.covariance_valid[i] = 1;
    }
    return out;
}

}  // namespace redodom
