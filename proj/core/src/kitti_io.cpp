#include "redodom/kitti_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "redodom/errors.hpp"

namespace redodom::kitti {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kRecordBytes = 16;

float load_le_float(const unsigned char *bytes) {
    std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
                         static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
    return std::bit_cast<float>(bits);
}

void store_le_float(float v, unsigned char *bytes) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool parse_number(std::string_view s, double &out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

Pose pose_from_tokens(std::span<const std::string_view> values, const std::string &where) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int k = 0; k < 12; ++k) {
        double v = 0.0;
        if (!parse_number(values[k], v)) {
            throw FormatError(where + ": bad number '" + std::string(values[k]) + "'");
        }
        m(k / 4, k % 4) = v;
    }
    return Pose::FromMatrix(m);
}

std::ifstream open_text(const fs::path &path, const char *what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + " '" + path.string() + "'");
    return in;
}

}  // namespace

PointCloud read_scan(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scan '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading scan '" + path.string() + "'");
    if (bytes.size() % kRecordBytes != 0) {
        const std::size_t offset = bytes.size() - bytes.size() % kRecordBytes;
        throw FormatError(path.string() + ": truncated record at byte offset " + std::to_string(offset) +
                          " (file size " + std::to_string(bytes.size()) + ")");
    }
    PointCloud cloud;
    const std::size_t n = bytes.size() / kRecordBytes;
    cloud.points.reserve(n);
    cloud.intensities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char *r = bytes.data() + i * kRecordBytes;
        cloud.points.emplace_back(load_le_float(r), load_le_float(r + 4), load_le_float(r + 8));
        cloud.intensities.push_back(load_le_float(r + 12));
    }
    return cloud;
}

void write_scan(const fs::path &path, const PointCloud &cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write scan '" + path.string() + "'");
    const bool with_intensity = cloud.intensities.size() == cloud.size();
    std::vector<unsigned char> bytes(cloud.size() * kRecordBytes);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        unsigned char *r = bytes.data() + i * kRecordBytes;
        store_le_float(static_cast<float>(cloud.points[i].x()), r);
        store_le_float(static_cast<float>(cloud.points[i].y()), r + 4);
        store_le_float(static_cast<float>(cloud.points[i].z()), r + 8);
        store_le_float(with_intensity ? cloud.intensities[i] : 0.0f, r + 12);
    }
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing scan '" + path.string() + "'");
}

std::vector<Pose> parse_poses(std::istream &in, std::string_view source_name) {
    std::vector<Pose> poses;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto values = tokens(line);
        if (values.empty()) continue;
        const std::string where = std::string(source_name) + ":" + std::to_string(line_number);
        if (values.size() != 12) {
            throw FormatError(where + ": expected 12 values, got " + std::to_string(values.size()));
        }
        poses.push_back(pose_from_tokens(values, where));
    }
    return poses;
}

std::vector<Pose> read_poses(const fs::path &path) {
    auto in = open_text(path, "pose file");
    return parse_poses(in, path.string());
}

std::string format_pose_line(const Pose &pose) {
    const Eigen::Matrix4d m = pose.matrix();
    std::string line;
    char buf[32];
    for (int k = 0; k < 12; ++k) {
        std::snprintf(buf, sizeof(buf), "%.8e", m(k / 4, k % 4));
        if (k) line += ' ';
        line += buf;
    }
    return line;
}

void write_poses(const fs::path &path, std::span<const Pose> poses) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write pose file '" + path.string() + "'");
    for (const auto &p : poses) out << format_pose_line(p) << '\n';
    if (!out) throw IoError("failed writing pose file '" + path.string() + "'");
}

std::vector<Pose> to_camera_frame(std::span<const Pose> velodyne_poses, const Pose &calib) {
    const Pose calib_inv = calib.inverse();
    std::vector<Pose> out;
    out.reserve(velodyne_poses.size());
    for (const auto &p : velodyne_poses) out.push_back(compose(compose(calib, p), calib_inv));
    return out;
}

void write_poses(const OdometryHistory &history, const Pose &calib, const fs::path &path) {
    if (history.empty()) throw std::invalid_argument("write_poses: empty history");
    const auto camera = to_camera_frame(history.world_poses(), calib);
    write_poses(path, camera);
}

Pose read_calibration(const fs::path &path) {
    auto in = open_text(path, "calibration file");
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto values = tokens(line);
        if (values.empty() || values.front() != "Tr:") continue;
        const std::string where = path.string() + ":" + std::to_string(line_number);
        if (values.size() != 13) {
            throw FormatError(where + ": Tr expects 12 values, got " + std::to_string(values.size() - 1));
        }
        Pose tr = pose_from_tokens(std::span(values).subspan(1), where);
        tr.rotation = project_to_rotation(tr.rotation);
        return tr;
    }
    throw FormatError(path.string() + ": no 'Tr:' entry");
}

std::vector<double> read_times(const fs::path &path) {
    auto in = open_text(path, "times file");
    std::vector<double> times;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto values = tokens(line);
        if (values.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_number);
        double t = 0.0;
        if (values.size() != 1 || !parse_number(values[0], t)) {
            throw FormatError(where + ": expected one timestamp");
        }
        if (!times.empty() && !(t > times.back())) {
            throw FormatError(where + ": timestamps must increase strictly");
        }
        times.push_back(t);
    }
    return times;
}

KittiSequence open_sequence(const fs::path &directory) {
    if (!fs::is_directory(directory)) throw IoError("sequence directory '" + directory.string() + "' not found");
    const fs::path velodyne = directory / "velodyne";
    if (!fs::is_directory(velodyne)) throw IoError("no velodyne/ folder in '" + directory.string() + "'");

    KittiSequence seq;
    seq.directory = directory;
    for (const auto &entry : fs::directory_iterator(velodyne)) {
        if (entry.is_regular_file() && entry.path().extension() == ".bin") seq.scan_paths.push_back(entry.path());
    }
    std::sort(seq.scan_paths.begin(), seq.scan_paths.end());
    if (seq.scan_paths.empty()) throw FormatError("no .bin scans in '" + velodyne.string() + "'");

    if (fs::exists(directory / "calib.txt")) seq.calib_tr = read_calibration(directory / "calib.txt");
    if (fs::exists(directory / "times.txt")) {
        seq.timestamps = read_times(directory / "times.txt");
        if (seq.timestamps.size() != seq.scan_paths.size()) {
            throw FormatError((directory / "times.txt").string() + ": " + std::to_string(seq.timestamps.size()) +
                              " timestamps for " + std::to_string(seq.scan_paths.size()) + " scans");
        }
    }
    fs::path gt = directory / "poses.txt";
    if (!fs::exists(gt)) {
        const fs::path canonical = fs::weakly_canonical(directory);
        gt = canonical.parent_path().parent_path() / "poses" / (canonical.filename().string() + ".txt");
    }
    if (fs::exists(gt)) {
        auto poses = read_poses(gt);
        if (poses.size() != seq.scan_paths.size()) {
            throw FormatError(gt.string() + ": " + std::to_string(poses.size()) + " poses for " +
                              std::to_string(seq.scan_paths.size()) + " scans");
        }
        seq.ground_truth = std::move(poses);
    }
    return seq;
}

ScanReader::ScanReader(const KittiSequence &sequence, std::size_t read_ahead)
    : paths_(sequence.scan_paths), timestamps_(sequence.timestamps), read_ahead_(std::max<std::size_t>(1, read_ahead)) {
    refill();
}

void ScanReader::refill() {
    while (pending_.size() < read_ahead_ && next_to_schedule_ < paths_.size()) {
        pending_.push_back(std::async(std::launch::async, [path = paths_[next_to_schedule_]] { return read_scan(path); }));
        ++next_to_schedule_;
    }
}

std::optional<TimedScan> ScanReader::next() {
    if (pending_.empty()) return std::nullopt;
    TimedScan item;
    auto future = std::move(pending_.front());
    pending_.pop_front();
    item.cloud = future.get();
    if (!timestamps_.empty()) item.timestamp = timestamps_[next_to_return_];
    item.cloud.timestamp = item.timestamp.value_or(0.0);
    ++next_to_return_;
    refill();
    return item;
}

}  // namespace redodom::kitti
