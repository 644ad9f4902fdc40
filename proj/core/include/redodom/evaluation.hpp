#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "redodom/pose.hpp"

namespace redodom {

/// Segment lengths of the KITTI odometry metric, in meters.
inline constexpr std::array<double, 8> kSegmentLengths = {100, 200, 300, 400, 500, 600, 700, 800};
/// Start frames are taken every kStartFrameStep frames.
inline constexpr std::size_t kStartFrameStep = 10;

struct SegmentError {
    std::size_t first_frame = 0;
    std::size_t last_frame = 0;
    double length = 0.0;  // meters
    double t_err = 0.0;   // translation error / length
    double r_err = 0.0;   // rad / m
};

struct EvaluationResult {
    /// Undefined (absent) when no segment fits in the trajectory.
    std::optional<double> t_avg_percent;
    std::optional<double> r_avg_deg_per_100m;
    std::vector<SegmentError> segments;
};

/// Cumulative ground-truth arc length, dist[0] = 0.
std::vector<double> trajectory_distances(std::span<const Pose> poses);

/// Index of the first frame whose arc length exceeds dist[first] + length,
/// or nullopt when the trajectory ends first.
std::optional<std::size_t> segment_end(std::span<const double> dist, std::size_t first, double length);

/// Relative error metric. Throws std::invalid_argument if the lengths differ
/// or fewer than two poses are given.
EvaluationResult evaluate(std::span<const Pose> estimated, std::span<const Pose> ground_truth);

/// "t / r" with two and four decimals, or "undefined".
std::string format_report(const EvaluationResult &result);

/// first_frame,last_frame,length,t_err,r_err per segment.
void write_segments_csv(std::ostream &out, const EvaluationResult &result);
void write_segments_csv(const std::filesystem::path &path, const EvaluationResult &result);

}  // namespace redodom
