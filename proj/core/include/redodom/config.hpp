#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "redodom/registration.hpp"
#include "redodom/sanity.hpp"
#include "redodom/selection.hpp"

namespace redodom {

struct PipelineConfig {
    // cvm is always added if missing.
    std::vector<EstimatorId> enabled_estimators{std::string(estimators::kP2PIcp),
                                                std::string(estimators::kGicp),
                                                std::string(estimators::kNdt),
                                                std::string(estimators::kCvm)};
    double voxel_size = 0.25;  // m
    VehicleModel vehicle;
    ScoringConfig scoring;
    std::size_t n_map = 10;
    EstimatorConfig estimator;
    double default_frame_rate = 10.0;  // Hz, used when timestamps are missing
    bool concurrent = true;            // run estimators of a frame in parallel

    /// Throws std::invalid_argument on any out-of-range field.
    void validate() const;
};

/// Splits "a,b,c" into estimator names; whitespace around names is ignored.
std::vector<EstimatorId> parse_estimator_list(std::string_view list);

/// Key-value config text: one `key = value` per line, `#` starts a comment.
/// Unknown keys and malformed values raise FormatError naming the line.
/// Keys not present keep their defaults.
///
///   estimators                  comma list of p2p_icp, gicp, ndt, cvm
///   voxel_size                  m
///   l, a_max, v_th              vehicle model
///   r_s, n_map, min_match_fraction
///   max_iterations, convergence_translation, convergence_rotation,
///   max_correspondence_distance, ndt_cell_size, ndt_outlier_ratio,
///   gicp_epsilon, normal_neighbors, covariance_neighbors
///   default_frame_rate          Hz
///   concurrent                  true / false
PipelineConfig parse_config(std::istream &in, std::string_view source_name = "<config>");
PipelineConfig load_config(const std::filesystem::path &path);

/// Inverse of parse_config: every key with its current value.
std::string format_config(const PipelineConfig &cfg);

}  // namespace redodom
