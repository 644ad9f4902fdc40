#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "redodom/pose.hpp"

namespace redodom {

/// Ordered set of 3-D points in meters. Normals, covariances and
/// intensities are optional channels: an empty vector means absent,
/// otherwise the channel has one entry per point.
struct PointCloud {
    std::vector<Eigen::Vector3d> points;
    std::vector<Eigen::Vector3d> normals;
    std::vector<std::uint8_t> normal_valid;
    std::vector<Eigen::Matrix3d> covariances;
    std::vector<std::uint8_t> covariance_valid;
    std::vector<float> intensities;
    double timestamp = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !points.empty() && normals.size() == points.size(); }
    bool has_covariances() const {
        return !points.empty() && covariances.size() == points.size();
    }
};

/// Maps every point through the pose; normals are rotated and covariances
/// conjugated. The timestamp is preserved.
PointCloud apply(const Pose &pose, const PointCloud &cloud);

/// One centroid per occupied voxel, in order of first occurrence.
/// Optional channels are dropped. Throws std::invalid_argument when
/// voxel_size <= 0.
PointCloud voxel_downsample(const PointCloud &cloud, double voxel_size);

/// Adds unit normals from the k-NN scatter matrix (smallest eigenvector),
/// oriented toward the sensor origin. Points whose neighborhood has rank < 2
/// get a zero normal and normal_valid = 0.
PointCloud estimate_normals(const PointCloud &cloud, int k);

/// Adds plane-model covariances: the k-NN scatter eigenvalues are replaced by
/// (epsilon, 1, 1), smallest axis first. Degenerate neighborhoods get the
/// identity and covariance_valid = 0.
PointCloud estimate_covariances(const PointCloud &cloud, int k, double epsilon);

}  // namespace redodom
