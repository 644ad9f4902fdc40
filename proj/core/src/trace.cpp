#include "redodom/trace.hpp"

#include <Eigen/Geometry>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "redodom/errors.hpp"

namespace redodom {

namespace {

std::string fmt_double(const char *spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    while (true) {
        const auto comma = line.find(',');
        fields.push_back(line.substr(0, comma));
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return fields;
}

double to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument("bad number '" + std::string(s) + "'");
    }
    return v;
}

bool to_flag(std::string_view s) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw std::invalid_argument("bad flag '" + std::string(s) + "'");
}

}  // namespace

std::vector<TraceRecord> trace_records(const FrameResult &frame) {
    std::vector<TraceRecord> out;
    for (std::size_t i = 0; i < frame.proposals.size(); ++i) {
        const auto &p = frame.proposals[i];
        out.push_back({frame.frame_index, frame.timestamp, p.method, p.converged, p.sanity, p.chamfer,
                       i == frame.selected, p.transform});
    }
    return out;
}

void write_trace_header(std::ostream &out) { out << kTraceHeader << '\n'; }

void write_trace_record(std::ostream &out, const TraceRecord &r) {
    const Eigen::Quaterniond q(r.transform.rotation);
    out << r.frame_index << ',' << fmt_double("%.6f", r.timestamp) << ',' << r.method << ','
        << (r.converged ? 1 : 0) << ',' << to_string(r.sanity) << ','
        << (r.chamfer ? fmt_double("%.9g", *r.chamfer) : std::string()) << ',' << (r.selected ? 1 : 0);
    for (double v : {r.transform.translation.x(), r.transform.translation.y(),
                     r.transform.translation.z(), q.x(), q.y(), q.z(), q.w()}) {
        out << ',' << fmt_double("%.17g", v);
    }
    out << '\n';
}

std::vector<TraceRecord> parse_trace(std::istream &in, std::string_view source_name) {
    std::vector<TraceRecord> records;
    std::string line;
    std::size_t line_number = 0;
    auto fail = [&](const std::string &what) {
        throw FormatError(std::string(source_name) + ":" + std::to_string(line_number) + ": " + what);
    };
    if (!std::getline(in, line)) {
        line_number = 1;
        fail("missing header");
    }
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) fail("unexpected header");
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 14) fail("expected 14 fields, got " + std::to_string(f.size()));
        try {
            TraceRecord r;
            const double frame = to_double(f[0]);
            if (frame < 0 || frame != static_cast<double>(static_cast<std::size_t>(frame))) {
                throw std::invalid_argument("bad frame index");
            }
            r.frame_index = static_cast<std::size_t>(frame);
            r.timestamp = to_double(f[1]);
            if (f[2].empty()) throw std::invalid_argument("empty method");
            r.method = std::string(f[2]);
            r.converged = to_flag(f[3]);
            r.sanity = verdict_from_string(f[4]);
            if (!f[5].empty()) r.chamfer = to_double(f[5]);
            r.selected = to_flag(f[6]);
            r.transform.translation = {to_double(f[7]), to_double(f[8]), to_double(f[9])};
            Eigen::Quaterniond q(to_double(f[13]), to_double(f[10]), to_double(f[11]), to_double(f[12]));
            if (!(q.norm() > 0.5)) throw std::invalid_argument("quaternion is not unit length");
            r.transform.rotation = q.normalized().toRotationMatrix();
            records.push_back(std::move(r));
        } catch (const std::invalid_argument &e) {
            fail(e.what());
        }
    }
    return records;
}

std::vector<TraceRecord> read_trace(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file '" + path.string() + "'");
    return parse_trace(in, path.string());
}

}  // namespace redodom
