#include "redodom/history.hpp"

#include <utility>

namespace redodom {

void OdometryHistory::append(const Pose &relative, double timestamp, std::string method,
                             std::optional<double> score) {
    const Pose world = world_poses_.empty() ? relative : compose(world_poses_.back(), relative);
    relative_transforms_.push_back(relative);
    world_poses_.push_back(world);
    timestamps_.push_back(timestamp);
    selected_methods_.push_back(std::move(method));
    scores_.push_back(score);
}

std::optional<Pose> OdometryHistory::last_motion() const {
    if (size() < 2) return std::nullopt;
    return relative_transforms_.back();
}

std::optional<double> OdometryHistory::last_interval() const {
    if (size() < 2) return std::nullopt;
    return timestamps_[size() - 1] - timestamps_[size() - 2];
}

}  // namespace redodom
