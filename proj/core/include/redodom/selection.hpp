#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "redodom/history.hpp"
#include "redodom/kdtree.hpp"
#include "redodom/point_cloud.hpp"
#include "redodom/registration.hpp"

namespace redodom {

struct ScoringConfig {
    double r_s = 0.5;                 // correspondence search radius [m]
    double min_match_fraction = 0.1;  // below this the score is invalid

    void validate() const;
};

/// Rolling aggregate of the most recent scans, expressed in the frame of the
/// latest history entry.
struct LocalMap {
    std::size_t n_map = 10;
    PointCloud cloud;
    std::shared_ptr<const KdTree> index;  // null when the map is empty
    std::vector<std::size_t> frames;      // history frame of each retained scan

    bool empty() const { return cloud.empty(); }
};

/// A scan tagged with the history frame it was captured at.
struct MapScan {
    std::size_t frame = 0;
    PointCloud cloud;
};

/// Places the last n_map scans with the selected pose chain, concatenates
/// them, optionally re-voxelizes the aggregate, and indexes it.
LocalMap build_local_map(const OdometryHistory &history, std::span<const MapScan> scans,
                         std::size_t n_map, std::optional<double> voxel_size = std::nullopt);

/// Convenience form: scans.back() belongs to the latest history frame and the
/// others to the frames directly before it.
LocalMap build_local_map(const OdometryHistory &history, std::span<const PointCloud> scans,
                         std::size_t n_map, std::optional<double> voxel_size = std::nullopt);

/// Mean nearest-neighbor distance from the transformed source to the map,
/// over points with a neighbor within r_s. Invalid (nullopt) on an empty map
/// or when fewer than min_match_fraction of the points match.
std::optional<double> chamfer_distance(const PointCloud &source, const LocalMap &map,
                                       const Pose &transform, const ScoringConfig &cfg);

/// Tie-break rank: lower wins. p2p_icp, gicp, ndt, plug-ins, cvm.
int estimator_priority(std::string_view method);

/// Scores every passed proposal (writing its chamfer field, clearing it on
/// the others) and returns the index of the lowest valid score. Falls back to
/// the cvm proposal when nothing has a valid score. Throws
/// std::invalid_argument if that fallback is needed but no cvm proposal exists.
std::size_t select_best(std::span<TransformProposal> proposals, const PointCloud &source,
                        const LocalMap &map, const ScoringConfig &cfg);

/// Index of the best already-scored proposal (no scoring performed).
std::size_t select_scored(std::span<const TransformProposal> proposals);

}  // namespace redodom
