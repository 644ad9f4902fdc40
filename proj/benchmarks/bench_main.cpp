#include <benchmark/benchmark.h>

#include <random>

#include "redodom/kdtree.hpp"
#include "redodom/pipeline.hpp"
#include "redodom/registration.hpp"
#include "redodom/selection.hpp"
#include "synthetic.hpp"

namespace {

using namespace redodom;

PointCloud scene_cloud(std::size_t n, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    return synthetic::structured_scene(seed).sample(n, rng, 0.01);
}

void BM_KdTreeBuild(benchmark::State &state) {
    const PointCloud cloud = scene_cloud(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        KdTree tree(cloud.points);
        benchmark::DoNotOptimize(tree);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdTreeBuild)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_KdTreeNearest(benchmark::State &state) {
    const PointCloud cloud = scene_cloud(static_cast<std::size_t>(state.range(0)));
    const KdTree tree(cloud.points);
    const PointCloud queries = scene_cloud(1000, 2);
    for (auto _ : state) {
        for (const auto &q : queries.points) benchmark::DoNotOptimize(tree.nearest(q));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_KdTreeNearest)->Arg(10000)->Arg(100000);

void BM_KdTreeKnn(benchmark::State &state) {
    const PointCloud cloud = scene_cloud(50000);
    const KdTree tree(cloud.points);
    const PointCloud queries = scene_cloud(1000, 2);
    const auto k = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        for (const auto &q : queries.points) benchmark::DoNotOptimize(tree.knn(q, k));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_KdTreeKnn)->Arg(5)->Arg(20);

struct RegistrationFixture {
    PreparedScan source;
    PreparedScan target;
    Pose truth = Pose::FromYaw(0.02, Eigen::Vector3d(0.4, 0.05, 0.0));
    EstimatorConfig cfg;

    explicit RegistrationFixture(std::size_t n) {
        const PointCloud t = voxel_downsample(scene_cloud(n), 0.25);
        target = prepare_scan(t, cfg);
        source = prepare_scan(apply(truth.inverse(), t), cfg);
    }
    FrameInputs inputs(const OdometryHistory &history) const {
        FrameInputs in;
        in.frame_index = 1;
        in.source = &source;
        in.target = &target;
        in.history = &history;
        return in;
    }
};

void BM_Estimator(benchmark::State &state, const char *id) {
    const RegistrationFixture fx(20000);
    const auto estimator = make_estimator(id);
    const OdometryHistory history;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimator->estimate(fx.inputs(history), Pose::Identity(), fx.cfg));
    }
    state.counters["points"] = static_cast<double>(fx.source.cloud.size());
}
BENCHMARK_CAPTURE(BM_Estimator, p2p_icp, "p2p_icp")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Estimator, gicp, "gicp")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Estimator, ndt, "ndt")->Unit(benchmark::kMillisecond);

void BM_PrepareScan(benchmark::State &state) {
    const PointCloud cloud = voxel_downsample(scene_cloud(20000), 0.25);
    const EstimatorConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(prepare_scan(cloud, cfg));
}
BENCHMARK(BM_PrepareScan)->Unit(benchmark::kMillisecond);

void BM_Chamfer(benchmark::State &state) {
    const auto n_map = static_cast<std::size_t>(state.range(0));
    std::vector<PointCloud> scans;
    OdometryHistory history;
    for (std::size_t i = 0; i < n_map; ++i) {
        scans.push_back(voxel_downsample(scene_cloud(8000, 10 + i), 0.25));
        history.append(Pose::Identity(), 0.1 * static_cast<double>(i), "cvm", std::nullopt);
    }
    const LocalMap map = build_local_map(history, std::span<const PointCloud>(scans), n_map, 0.25);
    const PointCloud source = voxel_downsample(scene_cloud(8000, 99), 0.25);
    const ScoringConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(chamfer_distance(source, map, Pose::Identity(), cfg));
    state.counters["map_points"] = static_cast<double>(map.cloud.size());
}
BENCHMARK(BM_Chamfer)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_PipelineFrame(benchmark::State &state) {
    synthetic::SequenceOptions o;
    o.frames = 12;
    const auto seq = synthetic::drive_sequence(o);
    PipelineConfig cfg;
    cfg.concurrent = state.range(0) != 0;
    for (auto _ : state) {
        state.PauseTiming();
        Odometry odometry(cfg);
        for (std::size_t k = 0; k + 1 < seq.scans.size(); ++k) odometry.process_frame(seq.scans[k], seq.timestamps[k]);
        state.ResumeTiming();
        benchmark::DoNotOptimize(odometry.process_frame(seq.scans.back(), seq.timestamps.back()));
    }
}
BENCHMARK(BM_PipelineFrame)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
