#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "redodom/config.hpp"
#include "redodom/errors.hpp"
#include "redodom/evaluation.hpp"
#include "redodom/kitti_io.hpp"
#include "redodom/pipeline.hpp"
#include "redodom/sanity.hpp"
#include "redodom/trace.hpp"

namespace redodom::cli {

namespace fs = std::filesystem;

namespace {

void require_exists(const fs::path &path, const char *what) {
    if (!fs::exists(path)) throw IoError(std::string(what) + " '" + path.string() + "' does not exist");
}

std::ofstream open_output(const fs::path &path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

std::string number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct PickCounts {
    std::size_t picks = 0;
    std::size_t rejected_dynamic = 0;
    std::size_t rejected_kinematic = 0;
    std::size_t unconverged = 0;
};

}  // namespace

int cmd_run(const RunManifest &manifest, std::ostream &out) {
    require_exists(manifest.sequence, "sequence directory");
    require_exists(manifest.config, "config file");
    PipelineConfig cfg = load_config(manifest.config);
    if (manifest.estimators) {
        try {
            cfg.enabled_estimators = parse_estimator_list(*manifest.estimators);
            cfg.validate();
        } catch (const std::invalid_argument &e) {
            throw FormatError(std::string("--estimators: ") + e.what());
        }
    }
    for (const auto &id : cfg.enabled_estimators) {
        try {
            make_estimator(id);
        } catch (const std::invalid_argument &e) {
            throw FormatError((manifest.estimators ? std::string("--estimators") : manifest.config.string()) +
                              ": " + e.what());
        }
    }
    const kitti::KittiSequence sequence = kitti::open_sequence(manifest.sequence);
    fs::create_directories(manifest.output);

    auto trace_out = open_output(manifest.output / "trace.csv");
    write_trace_header(trace_out);
    std::map<std::string, PickCounts> counts;
    for (const auto &id : cfg.enabled_estimators) counts[id];
    std::size_t degraded = 0;

    kitti::ScanReader reader(sequence);
    const OdometryHistory history = run_sequence([&] { return reader.next(); }, cfg, [&](const FrameResult &frame) {
        for (const auto &record : trace_records(frame)) write_trace_record(trace_out, record);
        for (const auto &p : frame.proposals) {
            auto &c = counts[p.method];
            c.rejected_dynamic += p.sanity == SanityVerdict::rejected_dynamic ? 1 : 0;
            c.rejected_kinematic += p.sanity == SanityVerdict::rejected_kinematic ? 1 : 0;
            c.unconverged += p.converged ? 0 : 1;
        }
        ++counts[frame.selection().method].picks;
        degraded += frame.degraded ? 1 : 0;
    });
    trace_out.close();
    if (!trace_out) throw IoError("failed writing '" + (manifest.output / "trace.csv").string() + "'");

    kitti::write_poses(history, sequence.calib_tr, manifest.output / "poses.txt");

    std::string estimators;
    for (const auto &id : cfg.enabled_estimators) estimators += (estimators.empty() ? "" : ",") + id;
    std::ostringstream summary;
    summary << "frames " << history.size() << "\n";
    summary << "degraded_frames " << degraded << "\n";
    summary << "estimators " << estimators << "\n";
    summary << "# method picks rejected_dynamic rejected_kinematic unconverged\n";
    for (const auto &[method, c] : counts) {
        summary << "method " << method << ' ' << c.picks << ' ' << c.rejected_dynamic << ' '
                << c.rejected_kinematic << ' ' << c.unconverged << "\n";
    }
    if (sequence.ground_truth) {
        const auto estimated = kitti::to_camera_frame(history.world_poses(), sequence.calib_tr);
        summary << "kitti_error " << format_report(evaluate(estimated, *sequence.ground_truth)) << "\n";
    }
    auto summary_out = open_output(manifest.output / "summary.txt");
    summary_out << summary.str();
    out << summary.str();
    return kSuccess;
}

int cmd_eval(const fs::path &estimated, const fs::path &ground_truth, const std::optional<fs::path> &segments_csv,
             std::ostream &out) {
    const auto est = kitti::read_poses(estimated);
    const auto gt = kitti::read_poses(ground_truth);
    if (est.size() != gt.size()) {
        throw FormatError("'" + estimated.string() + "' has " + std::to_string(est.size()) + " poses, '" +
                          ground_truth.string() + "' has " + std::to_string(gt.size()));
    }
    if (est.size() < 2) throw FormatError("'" + estimated.string() + "': need at least two poses");
    const EvaluationResult result = evaluate(est, gt);
    if (segments_csv) write_segments_csv(*segments_csv, result);
    out << format_report(result) << "\n";
    return kSuccess;
}

int cmd_plotdata(const fs::path &trace_path, const fs::path &output, std::ostream &out) {
    const auto records = read_trace(trace_path);
    if (records.empty()) throw FormatError(trace_path.string() + ": no records");

    // Group rows by frame; method ids follow first appearance.
    std::vector<std::string> methods;
    struct Frame {
        double timestamp = 0.0;
        const TraceRecord *selected = nullptr;
        std::map<std::string, const TraceRecord *> proposals;
    };
    std::vector<Frame> frames;
    for (const auto &r : records) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
        if (r.frame_index != frames.size() && r.frame_index + 1 != frames.size()) {
            throw FormatError(trace_path.string() + ": frame " + std::to_string(r.frame_index) + " out of order");
        }
        if (r.frame_index == frames.size()) frames.push_back({r.timestamp, nullptr, {}});
        Frame &f = frames.back();
        f.proposals[r.method] = &r;
        if (r.selected) {
            if (f.selected) throw FormatError(trace_path.string() + ": frame " + std::to_string(r.frame_index) +
                                              " selects two proposals");
            f.selected = &r;
        }
    }
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (!frames[k].selected) {
            throw FormatError(trace_path.string() + ": frame " + std::to_string(k) + " has no selected proposal");
        }
    }
    auto method_id = [&](const std::string &m) {
        return static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin());
    };
    fs::create_directories(output);

    {
        auto f = open_output(output / "method_choice.dat");
        f << "# method ids:";
        for (std::size_t i = 0; i < methods.size(); ++i) f << ' ' << i << '=' << methods[i];
        f << "\n# frame timestamp method_id method\n";
        for (std::size_t k = 0; k < frames.size(); ++k) {
            f << k << ' ' << number(frames[k].timestamp) << ' ' << method_id(frames[k].selected->method) << ' '
              << frames[k].selected->method << '\n';
        }
    }
    {
        // Acceleration of every proposal against the previous selection
        // (before filtering) and of the selection itself (after).
        auto f = open_output(output / "acceleration.dat");
        f << "# frame timestamp";
        for (const auto &m : methods) f << " a_" << m;
        f << " a_selected\n";
        for (std::size_t k = 0; k < frames.size(); ++k) {
            f << k << ' ' << number(frames[k].timestamp);
            const bool defined = k >= 2;
            const double dt = defined ? frames[k].timestamp - frames[k - 1].timestamp : 0.0;
            const double prev_dt = defined ? frames[k - 1].timestamp - frames[k - 2].timestamp : 0.0;
            auto accel = [&](const TraceRecord *r) {
                if (!defined || r == nullptr) return std::nan("");
                return estimate_acceleration(frames[k - 1].selected->transform, prev_dt, r->transform, dt);
            };
            for (const auto &m : methods) {
                const auto it = frames[k].proposals.find(m);
                f << ' ' << number(accel(it == frames[k].proposals.end() ? nullptr : it->second));
            }
            f << ' ' << number(accel(frames[k].selected)) << '\n';
        }
    }
    {
        auto f = open_output(output / "velocity.dat");
        f << "# frame timestamp v_forward\n";
        for (std::size_t k = 0; k < frames.size(); ++k) {
            const double v = k == 0 ? std::nan("")
                                    : frames[k].selected->transform.translation.x() /
                                          (frames[k].timestamp - frames[k - 1].timestamp);
            f << k << ' ' << number(frames[k].timestamp) << ' ' << number(v) << '\n';
        }
    }
    {
        auto f = open_output(output / "trajectory_xy.dat");
        f << "# frame x y\n";
        Pose world = Pose::Identity();
        for (std::size_t k = 0; k < frames.size(); ++k) {
            if (k > 0) world = compose(world, frames[k].selected->transform);
            f << k << ' ' << number(world.translation.x()) << ' ' << number(world.translation.y()) << '\n';
        }
    }
    out << "wrote " << frames.size() << " frames to " << output.string() << "\n";
    return kSuccess;
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Redundant LiDAR odometry: run, evaluate, export plot data", "redodom"};
    app.require_subcommand(1);

    RunManifest manifest;
    std::string estimators;
    auto *run = app.add_subcommand("run", "Run the odometry pipeline on a KITTI-layout sequence");
    run->add_option("--sequence", manifest.sequence, "Sequence directory (velodyne/, times.txt, calib.txt)")
        ->required();
    run->add_option("--config", manifest.config, "Pipeline configuration file")->required();
    run->add_option("--out", manifest.output, "Output directory")->required();
    run->add_option("--estimators", estimators, "Comma-separated estimator subset, e.g. gicp,ndt,cvm");

    fs::path est, gt, trace, plot_out;
    std::string csv;
    auto *eval = app.add_subcommand("eval", "KITTI relative error of a trajectory");
    eval->add_option("--est", est, "Estimated poses (KITTI format)")->required();
    eval->add_option("--gt", gt, "Ground-truth poses (KITTI format)")->required();
    eval->add_option("--csv", csv, "Write per-segment errors to this file");

    auto *plot = app.add_subcommand("plotdata", "Export gnuplot-ready series from a trace");
    plot->add_option("--trace", trace, "trace.csv written by run")->required();
    plot->add_option("--out", plot_out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*run) {
            if (!estimators.empty()) manifest.estimators = estimators;
            return cmd_run(manifest, out);
        }
        if (*eval) return cmd_eval(est, gt, csv.empty() ? std::nullopt : std::optional<fs::path>(csv), out);
        return cmd_plotdata(trace, plot_out, out);
    } catch (const FormatError &e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const IoError &e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const fs::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception &e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}

}  // namespace redodom::cli
