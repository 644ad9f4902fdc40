#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "redodom/pose.hpp"

namespace redodom {

/// The single selected odometry chain shared by every estimator.
/// Entry k holds the transform from frame k to frame k-1 (identity for
/// frame 0) and the accumulated world pose of frame k.
class OdometryHistory {
public:
    void append(const Pose &relative, double timestamp, std::string method,
                std::optional<double> score);

    std::size_t size() const { return relative_transforms_.size(); }
    bool empty() const { return relative_transforms_.empty(); }

    const std::vector<Pose> &relative_transforms() const { return relative_transforms_; }
    const std::vector<Pose> &world_poses() const { return world_poses_; }
    const std::vector<double> &timestamps() const { return timestamps_; }
    const std::vector<std::string> &selected_methods() const { return selected_methods_; }
    const std::vector<std::optional<double>> &scores() const { return scores_; }

    /// Last selected frame-to-frame motion; absent until two frames exist,
    /// since frame 0 carries no motion.
    std::optional<Pose> last_motion() const;
    /// Time between the last two frames; absent until two frames exist.
    std::optional<double> last_interval() const;

private:
    std::vector<Pose> relative_transforms_;
    std::vector<Pose> world_poses_;
    std::vector<double> timestamps_;
    std::vector<std::string> selected_methods_;
    std::vector<std::optional<double>> scores_;
};

}  // namespace redodom
