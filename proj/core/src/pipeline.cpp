#include "redodom/pipeline.hpp"

#include <future>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "redodom/errors.hpp"
#include "redodom/sanity.hpp"

namespace redodom {

namespace {

std::vector<std::shared_ptr<const Estimator>> built_in_stack(const PipelineConfig &cfg) {
    std::vector<std::shared_ptr<const Estimator>> stack;
    for (const auto &id : cfg.enabled_estimators) stack.push_back(make_estimator(id));
    return stack;
}

// Re-expresses a prepared scan in another frame and rebuilds its indices.
PreparedScan transform_prepared(const PreparedScan &scan, const Pose &pose, const EstimatorConfig &cfg) {
    PreparedScan out;
    out.cloud = apply(pose, scan.cloud);
    if (!out.cloud.empty()) {
        out.index = std::make_shared<const KdTree>(out.cloud.points);
        out.ndt_grid = std::make_shared<const NdtGrid>(out.cloud, cfg.ndt_cell_size);
    }
    return out;
}

}  // namespace

Odometry::Odometry(PipelineConfig cfg) : Odometry(cfg, built_in_stack(cfg)) {}

Odometry::Odometry(PipelineConfig cfg, std::vector<std::shared_ptr<const Estimator>> estimators)
    : cfg_(std::move(cfg)), estimators_(std::move(estimators)) {
    cfg_.validate();
    std::set<EstimatorId> ids;
    bool has_cvm = false;
    for (const auto &e : estimators_) {
        if (!e) throw std::invalid_argument("null estimator");
        const EstimatorId id = e->id();
        if (!ids.insert(id).second) throw std::invalid_argument("duplicate estimator '" + id + "'");
        has_cvm = has_cvm || id == estimators::kCvm;
    }
    if (!has_cvm) estimators_.push_back(make_estimator(estimators::kCvm));
    map_.n_map = cfg_.n_map;
}

std::vector<TransformProposal> Odometry::run_estimators(const FrameInputs &inputs,
                                                        const Pose &guess) const {
    std::vector<TransformProposal> proposals;
    proposals.reserve(estimators_.size());
    auto run_one = [&](const Estimator &e) {
        TransformProposal p = e.estimate(inputs, guess, cfg_.estimator);
        p.method = e.id();
        return p;
    };
    if (cfg_.concurrent && estimators_.size() > 1) {
        std::vector<std::future<TransformProposal>> pending;
        pending.reserve(estimators_.size());
        for (const auto &e : estimators_) {
            pending.push_back(std::async(std::launch::async, run_one, std::cref(*e)));
        }
        for (auto &f : pending) proposals.push_back(f.get());
    } else {
        for (const auto &e : estimators_) proposals.push_back(run_one(*e));
    }
    return proposals;
}

void Odometry::score(std::vector<TransformProposal> &proposals, const PointCloud &source) const {
    auto score_one = [&](const TransformProposal &p) -> std::optional<double> {
        if (p.sanity != SanityVerdict::passed) return std::nullopt;
        return chamfer_distance(source, map_, p.transform, cfg_.scoring);
    };
    if (cfg_.concurrent && proposals.size() > 1) {
        std::vector<std::future<std::optional<double>>> pending;
        pending.reserve(proposals.size());
        for (const auto &p : proposals) pending.push_back(std::async(std::launch::async, score_one, std::cref(p)));
        for (std::size_t i = 0; i < proposals.size(); ++i) proposals[i].chamfer = pending[i].get();
    } else {
        for (auto &p : proposals) p.chamfer = score_one(p);
    }
}

const PreparedScan *Odometry::target_in_latest_frame(std::optional<PreparedScan> &storage) const {
    if (!target_ || history_.empty()) return nullptr;
    const std::size_t latest = history_.size() - 1;
    if (target_frame_ == latest) return &*target_;
    // A degraded frame sits in between: move the last good scan forward.
    const Pose placement =
        compose(history_.world_poses()[latest].inverse(), history_.world_poses()[target_frame_]);
    storage = transform_prepared(*target_, placement, cfg_.estimator);
    return &*storage;
}

FrameResult Odometry::process_frame(const PointCloud &scan, std::optional<double> timestamp) {
    FrameResult result;
    result.frame_index = history_.size();
    const double nominal_dt = 1.0 / cfg_.default_frame_rate;
    if (history_.empty()) {
        result.timestamp = timestamp.value_or(0.0);
    } else {
        const double last = history_.timestamps().back();
        result.timestamp = timestamp.value_or(last + nominal_dt);
        if (!(result.timestamp > last)) {
            throw std::invalid_argument("frame " + std::to_string(result.frame_index) +
                                        ": timestamp does not increase");
        }
        result.delta_tau = result.timestamp - last;
    }

    PointCloud voxelized = scan.empty() ? PointCloud{} : voxel_downsample(scan, cfg_.voxel_size);
    voxelized.timestamp = result.timestamp;
    PreparedScan source = prepare_scan(voxelized, cfg_.estimator);
    result.degraded = source.empty();

    std::optional<PreparedScan> moved_target;
    const PreparedScan empty_scan;
    const PreparedScan *target = target_in_latest_frame(moved_target);
    FrameInputs inputs;
    inputs.frame_index = result.frame_index;
    inputs.source = &source;
    inputs.target = target != nullptr ? target : &empty_scan;
    inputs.history = &history_;

    const Pose guess = history_.empty() ? Pose::Identity() : history_.relative_transforms().back();
    result.proposals = run_estimators(inputs, guess);

    for (auto &p : result.proposals) {
        p.sanity = history_.empty()
                       ? SanityVerdict::passed
                       : run_sanity_checks(p.transform, history_, result.delta_tau, cfg_.vehicle);
    }

    if (result.degraded) {
        for (auto &p : result.proposals) p.chamfer.reset();
        for (std::size_t i = 0; i < result.proposals.size(); ++i) {
            if (result.proposals[i].method == estimators::kCvm) result.selected = i;
        }
    } else {
        score(result.proposals, source.cloud);
        result.selected = select_scored(result.proposals);
    }

    // Commit: the first frame always anchors the world frame at identity.
    const TransformProposal &chosen = result.selection();
    const Pose relative = history_.empty() ? Pose::Identity() : chosen.transform;
    history_.append(relative, result.timestamp, chosen.method, chosen.chamfer);

    if (!result.degraded) {
        map_scans_.push_back({result.frame_index, voxelized});
        while (map_scans_.size() > cfg_.n_map) map_scans_.pop_front();
        target_ = std::move(source);
        target_frame_ = result.frame_index;
    }
    const std::vector<MapScan> window(map_scans_.begin(), map_scans_.end());
    map_ = build_local_map(history_, std::span<const MapScan>(window), cfg_.n_map, cfg_.voxel_size);
    return result;
}

namespace {

template <typename Fn>
auto with_frame_context(std::size_t frame, Fn &&fn) {
    try {
        return fn();
    } catch (const FormatError &e) {
        throw FormatError("frame " + std::to_string(frame) + ": " + e.what());
    } catch (const IoError &e) {
        throw IoError("frame " + std::to_string(frame) + ": " + e.what());
    }
}

}  // namespace

OdometryHistory run_sequence(const ScanStream &next, const PipelineConfig &cfg,
                             std::vector<std::shared_ptr<const Estimator>> estimators,
                             const std::function<void(const FrameResult &)> &on_frame) {
    Odometry odometry(cfg, std::move(estimators));
    for (std::size_t frame = 0;; ++frame) {
        auto item = with_frame_context(frame, next);
        if (!item) break;
        const FrameResult result = odometry.process_frame(item->cloud, item->timestamp);
        if (on_frame) on_frame(result);
    }
    if (odometry.history().empty()) throw std::invalid_argument("run_sequence: empty scan stream");
    return odometry.history();
}

OdometryHistory run_sequence(const ScanStream &next, const PipelineConfig &cfg,
                             const std::function<void(const FrameResult &)> &on_frame) {
    return run_sequence(next, cfg, built_in_stack(cfg), on_frame);
}

}  // namespace redodom
