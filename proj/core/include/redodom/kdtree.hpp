#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace redodom {

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

/// Static k-d tree over a fixed point set. Results match an exhaustive scan:
/// neighbors are ordered by (distance, index), so equidistant points resolve
/// to the lowest index. Queries are const and safe to run concurrently.
class KdTree {
public:
    /// Throws std::invalid_argument on an empty point set.
    explicit KdTree(std::vector<Eigen::Vector3d> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Eigen::Vector3d> &points() const { return points_; }

    Neighbor nearest(const Eigen::Vector3d &query) const;

    /// Nearest neighbor with distance <= max_distance, if any.
    std::optional<Neighbor> nearest_within(const Eigen::Vector3d &query, double max_distance) const;

    /// The k closest points (fewer if the tree is smaller), sorted.
    std::vector<Neighbor> knn(const Eigen::Vector3d &query, std::size_t k) const;

    /// All points with distance <= radius, sorted.
    std::vector<Neighbor> radius(const Eigen::Vector3d &query, double radius) const;

private:
    struct Node {
        // Leaves: [begin, end) into order_. Inner nodes: split on axis at value.
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double split = 0.0;
        int axis = -1;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);

    template <typename Visitor>
    void search(std::int32_t node, const Eigen::Vector3d &query, Visitor &visitor) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

}  // namespace redodom
