#include "redodom/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "redodom/errors.hpp"

namespace redodom {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

long long parse_integer(std::string_view text) {
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw std::invalid_argument("expected true/false, got '" + std::string(text) + "'");
}

using Setter = std::function<void(PipelineConfig &, std::string_view)>;

const std::map<std::string, Setter, std::less<>> &setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"estimators", [](auto &c, auto v) { c.enabled_estimators = parse_estimator_list(v); }},
        {"voxel_size", [](auto &c, auto v) { c.voxel_size = parse_double(v); }},
        {"l", [](auto &c, auto v) { c.vehicle.l = parse_double(v); }},
        {"a_max", [](auto &c, auto v) { c.vehicle.a_max = parse_double(v); }},
        {"v_th", [](auto &c, auto v) { c.vehicle.v_th = parse_double(v); }},
        {"r_s", [](auto &c, auto v) { c.scoring.r_s = parse_double(v); }},
        {"min_match_fraction", [](auto &c, auto v) { c.scoring.min_match_fraction = parse_double(v); }},
        {"n_map",
         [](auto &c, auto v) {
             const long long n = parse_integer(v);
             if (n <= 0) throw std::invalid_argument("n_map must be positive");
             c.n_map = static_cast<std::size_t>(n);
         }},
        {"max_iterations",
         [](auto &c, auto v) { c.estimator.max_iterations = static_cast<int>(parse_integer(v)); }},
        {"convergence_translation",
         [](auto &c, auto v) { c.estimator.convergence_translation = parse_double(v); }},
        {"convergence_rotation",
         [](auto &c, auto v) { c.estimator.convergence_rotation = parse_double(v); }},
        {"max_correspondence_distance",
         [](auto &c, auto v) { c.estimator.max_correspondence_distance = parse_double(v); }},
        {"ndt_cell_size", [](auto &c, auto v) { c.estimator.ndt_cell_size = parse_double(v); }},
        {"ndt_outlier_ratio", [](auto &c, auto v) { c.estimator.ndt_outlier_ratio = parse_double(v); }},
        {"gicp_epsilon", [](auto &c, auto v) { c.estimator.gicp_epsilon = parse_double(v); }},
        {"normal_neighbors",
         [](auto &c, auto v) { c.estimator.normal_neighbors = static_cast<int>(parse_integer(v)); }},
        {"covariance_neighbors",
         [](auto &c, auto v) { c.estimator.covariance_neighbors = static_cast<int>(parse_integer(v)); }},
        {"default_frame_rate", [](auto &c, auto v) { c.default_frame_rate = parse_double(v); }},
        {"concurrent", [](auto &c, auto v) { c.concurrent = parse_bool(v); }},
    };
    return table;
}

std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void PipelineConfig::validate() const {
    if (enabled_estimators.empty()) throw std::invalid_argument("config: no estimators enabled");
    std::set<std::string> seen;
    for (const auto &id : enabled_estimators) {
        if (!seen.insert(id).second) throw std::invalid_argument("config: duplicate estimator '" + id + "'");
    }
    if (!(voxel_size > 0.0)) throw std::invalid_argument("config: voxel_size must be positive");
    if (n_map == 0) throw std::invalid_argument("config: n_map must be positive");
    if (!(default_frame_rate > 0.0)) throw std::invalid_argument("config: default_frame_rate must be positive");
    vehicle.validate();
    scoring.validate();
    estimator.validate();
}

std::vector<EstimatorId> parse_estimator_list(std::string_view list) {
    std::vector<EstimatorId> out;
    while (!list.empty()) {
        const auto comma = list.find(',');
        const std::string_view item = trim(list.substr(0, comma));
        if (item.empty()) throw std::invalid_argument("empty estimator name in list");
        out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
        if (trim(list).empty()) throw std::invalid_argument("empty estimator name in list");
    }
    if (out.empty()) throw std::invalid_argument("estimator list is empty");
    return out;
}

PipelineConfig parse_config(std::istream &in, std::string_view source_name) {
    PipelineConfig cfg;
    std::string raw;
    std::size_t line_number = 0;
    auto fail = [&](const std::string &what) {
        throw FormatError(std::string(source_name) + ":" + std::to_string(line_number) + ": " + what);
    };
    while (std::getline(in, raw)) {
        ++line_number;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) fail("unknown key '" + std::string(key) + "'");
        if (value.empty()) fail("missing value for '" + std::string(key) + "'");
        try {
            it->second(cfg, value);
        } catch (const std::invalid_argument &e) {
            fail(std::string(key) + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(std::string(source_name) + ": " + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    return parse_config(in, path.string());
}

std::string format_config(const PipelineConfig &cfg) {
    std::ostringstream out;
    out << "estimators = ";
    for (std::size_t i = 0; i < cfg.enabled_estimators.size(); ++i) {
        out << (i ? "," : "") << cfg.enabled_estimators[i];
    }
    out << "\n";
    out << "voxel_size = " << number(cfg.voxel_size) << "\n";
    out << "l = " << number(cfg.vehicle.l) << "\n";
    out << "a_max = " << number(cfg.vehicle.a_max) << "\n";
    out << "v_th = " << number(cfg.vehicle.v_th) << "\n";
    out << "r_s = " << number(cfg.scoring.r_s) << "\n";
    out << "n_map = " << cfg.n_map << "\n";
    out << "min_match_fraction = " << number(cfg.scoring.min_match_fraction) << "\n";
    out << "max_iterations = " << cfg.estimator.max_iterations << "\n";
    out << "convergence_translation = " << number(cfg.estimator.convergence_translation) << "\n";
    out << "convergence_rotation = " << number(cfg.estimator.convergence_rotation) << "\n";
    out << "max_correspondence_distance = " << number(cfg.estimator.max_correspondence_distance) << "\n";
    out << "ndt_cell_size = " << number(cfg.estimator.ndt_cell_size) << "\n";
    out << "ndt_outlier_ratio = " << number(cfg.estimator.ndt_outlier_ratio) << "\n";
    out << "gicp_epsilon = " << number(cfg.estimator.gicp_epsilon) << "\n";
    out << "normal_neighbors = " << cfg.estimator.normal_neighbors << "\n";
    out << "covariance_neighbors = " << cfg.estimator.covariance_neighbors << "\n";
    out << "default_frame_rate = " << number(cfg.default_frame_rate) << "\n";
    out << "concurrent = " << (cfg.concurrent ? "true" : "false") << "\n";
    return out.str();
}

}  // namespace redodom
