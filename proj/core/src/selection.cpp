#include "redodom/selection.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace redodom {

void ScoringConfig::validate() const {
    if (!(r_s > 0.0)) throw std::invalid_argument("scoring: r_s must be positive");
    if (!(min_match_fraction > 0.0 && min_match_fraction <= 1.0)) {
        throw std::invalid_argument("scoring: min_match_fraction must be in (0, 1]");
    }
}

LocalMap build_local_map(const OdometryHistory &history, std::span<const MapScan> scans,
                         std::size_t n_map, std::optional<double> voxel_size) {
    LocalMap map;
    map.n_map = n_map;
    if (history.empty() || scans.empty() || n_map == 0) return map;
    const std::size_t keep = std::min(n_map, scans.size());
    const Pose to_latest = history.world_poses().back().inverse();
    PointCloud aggregate;
    for (std::size_t i = scans.size() - keep; i < scans.size(); ++i) {
        const MapScan &scan = scans[i];
        if (scan.frame >= history.size()) {
            throw std::invalid_argument("local map: scan frame " + std::to_string(scan.frame) +
                                        " is not in the history");
        }
        const Pose placement = compose(to_latest, history.world_poses()[scan.frame]);
        for (const auto &p : scan.cloud.points) aggregate.points.push_back(placement * p);
        map.frames.push_back(scan.frame);
    }
    if (voxel_size && !aggregate.empty()) aggregate = voxel_downsample(aggregate, *voxel_size);
    map.cloud = std::move(aggregate);
    if (!map.cloud.empty()) map.index = std::make_shared<const KdTree>(map.cloud.points);
    return map;
}

LocalMap build_local_map(const OdometryHistory &history, std::span<const PointCloud> scans,
                         std::size_t n_map, std::optional<double> voxel_size) {
    if (scans.size() > history.size()) {
        throw std::invalid_argument("local map: more scans than history frames");
    }
    std::vector<MapScan> tagged;
    tagged.reserve(scans.size());
    const std::size_t first = history.size() - scans.size();
    for (std::size_t i = 0; i < scans.size(); ++i) tagged.push_back({first + i, scans[i]});
    return build_local_map(history, std::span<const MapScan>(tagged), n_map, voxel_size);
}

std::optional<double> chamfer_distance(const PointCloud &source, const LocalMap &map,
                                       const Pose &transform, const ScoringConfig &cfg) {
    if (source.empty() || map.empty() || !map.index) return std::nullopt;
    double sum = 0.0;
    std::size_t matched = 0;
    for (const auto &p : source.points) {
        const auto n = map.index->nearest_within(transform * p, cfg.r_s);
        if (!n) continue;
        sum += n->distance;
        ++matched;
    }
    const double fraction = static_cast<double>(matched) / static_cast<double>(source.size());
    if (matched == 0 || fraction < cfg.min_match_fraction) return std::nullopt;
    return sum / static_cast<double>(matched);
}

int estimator_priority(std::string_view method) {
    if (method == estimators::kP2PIcp) return 0;
    if (method == estimators::kGicp) return 1;
    if (method == estimators::kNdt) return 2;
    if (method == estimators::kCvm) return 4;
    return 3;
}

std::size_t select_scored(std::span<const TransformProposal> proposals) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const auto &p = proposals[i];
        if (p.sanity != SanityVerdict::passed || !p.chamfer) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto &b = proposals[*best];
        const int rank_p = estimator_priority(p.method);
        const int rank_b = estimator_priority(b.method);
        if (*p.chamfer < *b.chamfer ||
            (*p.chamfer == *b.chamfer &&
             (rank_p < rank_b || (rank_p == rank_b && p.method < b.method)))) {
            best = i;
        }
    }
    if (best) return *best;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        if (proposals[i].method == estimators::kCvm) return i;
    }
    throw std::invalid_argument("select_best: no scored proposal and no cvm fallback");
}

std::size_t select_best(std::span<TransformProposal> proposals, const PointCloud &source,
                        const LocalMap &map, const ScoringConfig &cfg) {
    for (auto &p : proposals) {
        p.chamfer = p.sanity == SanityVerdict::passed
                        ? chamfer_distance(source, map, p.transform, cfg)
                        : std::nullopt;
    }
    return select_scored(proposals);
}

}  // namespace redodom
