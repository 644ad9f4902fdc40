#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "redodom/history.hpp"
#include "redodom/pipeline.hpp"
#include "redodom/point_cloud.hpp"
#include "redodom/pose.hpp"

namespace redodom::kitti {

/// An odometry sequence directory:
///   velodyne/*.bin   scans, in file-name order
///   calib.txt        optional; "Tr" maps Velodyne to the left camera
///   times.txt        optional; one timestamp per scan
///   poses.txt        optional ground truth (camera frame); otherwise
///                    ../../poses/<sequence name>.txt is tried
struct KittiSequence {
    std::filesystem::path directory;
    std::vector<std::filesystem::path> scan_paths;
    std::vector<double> timestamps;  // empty when times.txt is absent
    Pose calib_tr;                   // identity when calib.txt is absent
    std::optional<std::vector<Pose>> ground_truth;
};

/// Little-endian float32 (x, y, z, reflectance) records. Throws IoError if
/// the file cannot be read, FormatError on a truncated record.
PointCloud read_scan(const std::filesystem::path &path);
void write_scan(const std::filesystem::path &path, const PointCloud &cloud);

/// Row-major 3x4 [R|t], 12 decimals per line. Blank lines are skipped.
std::vector<Pose> read_poses(const std::filesystem::path &path);
std::vector<Pose> parse_poses(std::istream &in, std::string_view source_name);
/// 9 significant digits, scientific notation.
void write_poses(const std::filesystem::path &path, std::span<const Pose> poses);
std::string format_pose_line(const Pose &pose);

/// World poses moved from the Velodyne frame to the camera frame,
/// Tr * pose * Tr^-1, one line per frame.
void write_poses(const OdometryHistory &history, const Pose &calib, const std::filesystem::path &path);
std::vector<Pose> to_camera_frame(std::span<const Pose> velodyne_poses, const Pose &calib);

/// The "Tr" entry of a calib.txt; FormatError if missing or malformed.
Pose read_calibration(const std::filesystem::path &path);
/// One decimal per line, strictly increasing.
std::vector<double> read_times(const std::filesystem::path &path);

/// Throws IoError when the directory or its velodyne/ folder is missing and
/// FormatError when times or ground truth disagree with the scan count.
KittiSequence open_sequence(const std::filesystem::path &directory);

/// Sequential scan reader with bounded read-ahead on a background task.
class ScanReader {
public:
    ScanReader(const KittiSequence &sequence, std::size_t read_ahead = 2);

    std::optional<TimedScan> next();
    std::size_t size() const { return paths_.size(); }

private:
    void refill();

    std::vector<std::filesystem::path> paths_;
    std::vector<double> timestamps_;
    std::size_t read_ahead_;
    std::size_t next_to_schedule_ = 0;
    std::deque<std::future<PointCloud>> pending_;
    std::size_t next_to_return_ = 0;
};

}  // namespace redodom::kitti
