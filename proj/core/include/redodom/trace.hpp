#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "redodom/pipeline.hpp"
#include "redodom/pose.hpp"
#include "redodom/registration.hpp"

namespace redodom {

/// One proposal of one frame. CSV columns, in order:
///   frame_index,timestamp,method,converged,sanity_verdict,chamfer,selected,
///   tx,ty,tz,qx,qy,qz,qw
/// chamfer is empty when absent; the pose columns hold the proposal
/// transform (current frame -> previous frame) at full precision.
struct TraceRecord {
    std::size_t frame_index = 0;
    double timestamp = 0.0;
    std::string method;
    bool converged = false;
    SanityVerdict sanity = SanityVerdict::untested;
    std::optional<double> chamfer;
    bool selected = false;
    Pose transform;
};

inline constexpr std::string_view kTraceHeader =
    "frame_index,timestamp,method,converged,sanity_verdict,chamfer,selected,tx,ty,tz,qx,qy,qz,qw";

std::vector<TraceRecord> trace_records(const FrameResult &frame);

void write_trace_header(std::ostream &out);
void write_trace_record(std::ostream &out, const TraceRecord &record);

/// Throws FormatError naming the line on malformed rows.
std::vector<TraceRecord> parse_trace(std::istream &in, std::string_view source_name = "<trace>");
std::vector<TraceRecord> read_trace(const std::filesystem::path &path);

}  // namespace redodom
