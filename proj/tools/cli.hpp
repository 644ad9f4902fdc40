#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace redodom::cli {

/// Process exit statuses.
enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kDataError = 2,
    kInternalError = 3,
};

/// Inputs of `run`. All paths must exist except the output directory,
/// which is created.
struct RunManifest {
    std::filesystem::path sequence;
    std::filesystem::path config;
    std::filesystem::path output;
    std::optional<std::string> estimators;  // overrides the config list
};

int cmd_run(const RunManifest &manifest, std::ostream &out);
int cmd_eval(const std::filesystem::path &estimated, const std::filesystem::path &ground_truth,
             const std::optional<std::filesystem::path> &segments_csv, std::ostream &out);
int cmd_plotdata(const std::filesystem::path &trace, const std::filesystem::path &output, std::ostream &out);

/// Parses arguments (without the program name) and dispatches. Diagnostics
/// go to err; the return value is the exit status.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace redodom::cli
