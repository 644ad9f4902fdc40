#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "redodom/config.hpp"
#include "redodom/history.hpp"
#include "redodom/point_cloud.hpp"
#include "redodom/registration.hpp"
#include "redodom/selection.hpp"

namespace redodom {

/// Outcome of one frame: every proposal with its verdict and score, and
/// which one was committed to the history.
struct FrameResult {
    std::size_t frame_index = 0;
    double timestamp = 0.0;
    double delta_tau = 0.0;  // 0 on the first frame
    std::vector<TransformProposal> proposals;
    std::size_t selected = 0;
    bool degraded = false;  // empty scan, cvm forced

    const TransformProposal &selection() const { return proposals[selected]; }
};

/// Redundant odometry over a stream of scans. Frames are processed strictly
/// in order; the estimators of one frame may run concurrently, and all of
/// them are seeded with the last selected transform.
class Odometry {
public:
    explicit Odometry(PipelineConfig cfg);
    /// Custom estimator stack (plug-ins, fault injection). A cvm estimator is
    /// appended if none is present. Throws std::invalid_argument on
    /// duplicate ids.
    Odometry(PipelineConfig cfg, std::vector<std::shared_ptr<const Estimator>> estimators);

    /// Timestamps must increase; when absent, the previous timestamp plus
    /// 1 / default_frame_rate is used.
    FrameResult process_frame(const PointCloud &scan, std::optional<double> timestamp = std::nullopt);

    const OdometryHistory &history() const { return history_; }
    const LocalMap &local_map() const { return map_; }
    const PipelineConfig &config() const { return cfg_; }
    const std::vector<std::shared_ptr<const Estimator>> &estimators() const { return estimators_; }

private:
    std::vector<TransformProposal> run_estimators(const FrameInputs &inputs, const Pose &guess) const;
    void score(std::vector<TransformProposal> &proposals, const PointCloud &source) const;
    const PreparedScan *target_in_latest_frame(std::optional<PreparedScan> &storage) const;

    PipelineConfig cfg_;
    std::vector<std::shared_ptr<const Estimator>> estimators_;
    OdometryHistory history_;
    std::deque<MapScan> map_scans_;
    LocalMap map_;
    std::optional<PreparedScan> target_;
    std::size_t target_frame_ = 0;
};

struct TimedScan {
    PointCloud cloud;
    std::optional<double> timestamp;
};

/// Returns the next scan, or nullopt at the end of the stream.
using ScanStream = std::function<std::optional<TimedScan>()>;

/// Folds process_frame over the stream. on_frame sees every frame result
/// (trace records). Reader errors are rethrown with the frame index.
OdometryHistory run_sequence(const ScanStream &next, const PipelineConfig &cfg,
                             const std::function<void(const FrameResult &)> &on_frame = {});

/// Same, with an explicit estimator stack.
OdometryHistory run_sequence(const ScanStream &next, const PipelineConfig &cfg,
                             std::vector<std::shared_ptr<const Estimator>> estimators,
                             const std::function<void(const FrameResult &)> &on_frame = {});

}  // namespace redodom
