#include "redodom/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

namespace redodom {

namespace {

constexpr std::uint32_t kLeafSize = 8;

struct Candidate {
    double squared_distance;
    std::uint32_t index;
    bool operator<(const Candidate &other) const {
        return squared_distance < other.squared_distance ||
               (squared_distance == other.squared_distance && index < other.index);
    }
};

std::vector<Neighbor> to_neighbors(std::vector<Candidate> candidates) {
    std::sort(candidates.begin(), candidates.end());
    std::vector<Neighbor> out;
    out.reserve(candidates.size());
    for (const auto &c : candidates) out.push_back({c.index, std::sqrt(c.squared_distance)});
    return out;
}

}  // namespace

KdTree::KdTree(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("KdTree: empty point set");
    if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("KdTree: too many points");
    }
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) return id;

    Eigen::Vector3d lo = points_[order_[begin]];
    Eigen::Vector3d hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all points coincide

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

// Visitor contract: bound() returns the squared distance beyond which a
// subtree can be skipped; visit(index, squared_distance) offers a point.
template <typename Visitor>
void KdTree::search(std::int32_t node_id, const Eigen::Vector3d &query, Visitor &visitor) const {
    const Node &node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            visitor.visit(idx, (points_[idx] - query).squaredNorm());
        }
        return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    search(near, query, visitor);
    if (diff * diff <= visitor.bound()) search(far, query, visitor);
}

Neighbor KdTree::nearest(const Eigen::Vector3d &query) const {
    struct Visitor {
        Candidate best{std::numeric_limits<double>::infinity(), 0};
        double bound() const { return best.squared_distance; }
        void visit(std::uint32_t idx, double d2) {
            const Candidate c{d2, idx};
            if (c < best) best = c;
        }
    } visitor;
    search(root_, query, visitor);
    return {visitor.best.index, std::sqrt(visitor.best.squared_distance)};
}

std::optional<Neighbor> KdTree::nearest_within(const Eigen::Vector3d &query,
                                               double max_distance) const {
    const Neighbor n = nearest(query);
    if (n.distance <= max_distance) return n;
    return std::nullopt;
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d &query, std::size_t k) const {
    if (k == 0) return {};
    struct Visitor {
        std::size_t k;
        std::priority_queue<Candidate> heap;  // max-heap: worst on top
        double bound() const {
            return heap.size() < k ? std::numeric_limits<double>::infinity()
                                   : heap.top().squared_distance;
        }
        void visit(std::uint32_t idx, double d2) {
            const Candidate c{d2, idx};
            if (heap.size() < k) {
                heap.push(c);
            } else if (c < heap.top()) {
                heap.pop();
                heap.push(c);
            }
        }
    } visitor{k, {}};
    search(root_, query, visitor);
    std::vector<Candidate> out;
    out.reserve(visitor.heap.size());
    while (!visitor.heap.empty()) {
        out.push_back(visitor.heap.top());
        visitor.heap.pop();
    }
    return to_neighbors(std::move(out));
}

std::vector<Neighbor> KdTree::radius(const Eigen::Vector3d &query, double radius) const {
    if (!(radius >= 0.0)) return {};
    struct Visitor {
        double radius;
        double radius_sq;
        std::vector<Candidate> found;
        double bound() const { return radius_sq; }
        void visit(std::uint32_t idx, double d2) {
            if (std::sqrt(d2) <= radius) found.push_back({d2, idx});
        }
    } visitor{radius, std::nextafter(radius * radius, std::numeric_limits<double>::infinity()), {}};
    search(root_, query, visitor);
    return to_neighbors(std::move(visitor.found));
}

}  // namespace redodom
