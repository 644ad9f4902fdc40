#include "redodom/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "redodom/errors.hpp"

namespace redodom {

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

std::vector<double> trajectory_distances(std::span<const Pose> poses) {
    std::vector<double> dist;
    dist.reserve(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        dist.push_back(i == 0 ? 0.0 : dist.back() + (poses[i].translation - poses[i - 1].translation).norm());
    }
    return dist;
}

std::optional<std::size_t> segment_end(std::span<const double> dist, std::size_t first, double length) {
    for (std::size_t i = first; i < dist.size(); ++i) {
        if (dist[i] > dist[first] + length) return i;
    }
    return std::nullopt;
}

EvaluationResult evaluate(std::span<const Pose> estimated, std::span<const Pose> ground_truth) {
    if (estimated.size() != ground_truth.size()) {
        throw std::invalid_argument("evaluate: " + std::to_string(estimated.size()) + " estimated poses vs " +
                                    std::to_string(ground_truth.size()) + " ground-truth poses");
    }
    if (estimated.size() < 2) throw std::invalid_argument("evaluate: need at least two poses");

    const std::vector<double> dist = trajectory_distances(ground_truth);
    EvaluationResult result;
    for (std::size_t first = 0; first < ground_truth.size(); first += kStartFrameStep) {
        for (const double length : kSegmentLengths) {
            const auto last = segment_end(dist, first, length);
            if (!last) continue;
            const Pose gt_rel = compose(ground_truth[first].inverse(), ground_truth[*last]);
            const Pose est_rel = compose(estimated[first].inverse(), estimated[*last]);
            // inv(X) * X is the identity; skip the rounding of the product.
            const Pose error = gt_rel.matrix() == est_rel.matrix() ? Pose::Identity()
                                                                   : compose(gt_rel.inverse(), est_rel);
            result.segments.push_back(
                {first, *last, length, error.translation.norm() / length, error.rotation_angle() / length});
        }
    }
    if (!result.segments.empty()) {
        double t_sum = 0.0;
        double r_sum = 0.0;
        for (const auto &s : result.segments) {
            t_sum += s.t_err;
            r_sum += s.r_err;
        }
        const double n = static_cast<double>(result.segments.size());
        result.t_avg_percent = 100.0 * t_sum / n;
        result.r_avg_deg_per_100m = 100.0 * (180.0 / std::numbers::pi) * r_sum / n;
    }
    return result;
}

std::string format_report(const EvaluationResult &result) {
    if (!result.t_avg_percent) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f / %.4f", *result.t_avg_percent, *result.r_avg_deg_per_100m);
    return buf;
}

void write_segments_csv(std::ostream &out, const EvaluationResult &result) {
    out << "first_frame,last_frame,length,t_err,r_err\n";
    for (const auto &s : result.segments) {
        out << s.first_frame << ',' << s.last_frame << ',' << shortest(s.length) << ',' << shortest(s.t_err) << ','
            << shortest(s.r_err) << '\n';
    }
}

void write_segments_csv(const std::filesystem::path &path, const EvaluationResult &result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write segment file '" + path.string() + "'");
    write_segments_csv(out, result);
    if (!out) throw IoError("failed writing segment file '" + path.string() + "'");
}

}  // namespace redodom
