#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "redodom/selection.hpp"
#include "synthetic.hpp"

namespace redodom {
namespace {

using Eigen::Vector3d;

// Brute-force Eq.-style score: every source point against every map point.
std::optional<double> chamfer_oracle(const PointCloud &source, const PointCloud &map, const Pose &t,
                                     const ScoringConfig &cfg) {
    if (map.empty() || source.empty()) return std::nullopt;
    double sum = 0.0;
    std::size_t matched = 0;
    for (const auto &s : source.points) {
        const Vector3d p = t * s;
        double best = std::numeric_limits<double>::infinity();
        for (const auto &m : map.points) best = std::min(best, (p - m).norm());
        if (best <= cfg.r_s) {
            sum += best;
            ++matched;
        }
    }
    if (matched == 0 || static_cast<double>(matched) / static_cast<double>(source.size()) < cfg.min_match_fraction) {
        return std::nullopt;
    }
    return sum / static_cast<double>(matched);
}

OdometryHistory history_of(const std::vector<Pose> &relative) {
    OdometryHistory h;
    for (std::size_t i = 0; i < relative.size(); ++i) h.append(relative[i], 0.1 * i, "p2p_icp", 0.1);
    return h;
}

LocalMap map_of(const PointCloud &cloud) {
    const OdometryHistory h = history_of({Pose::Identity()});
    const std::vector<PointCloud> scans{cloud};
    return build_local_map(h, std::span<const PointCloud>(scans), 10);
}

TransformProposal proposal(const std::string &method, const Pose &t, SanityVerdict v = SanityVerdict::passed) {
    TransformProposal p;
    p.method = method;
    p.transform = t;
    p.converged = true;
    p.sanity = v;
    return p;
}

// --------------------------------------------------------------- local map

TEST(BuildLocalMap, SingleScanIsTheMap) {
    std::mt19937_64 rng(1);
    const PointCloud scan = synthetic::random_cloud(rng, 100, 5.0);
    const LocalMap map = map_of(scan);
    EXPECT_EQ(map.cloud.points, scan.points);
    ASSERT_TRUE(map.index);
    EXPECT_EQ(map.frames, std::vector<std::size_t>{0});
}

TEST(BuildLocalMap, TwoScansAreOffsetBySelectedTranslation) {
    std::mt19937_64 rng(2);
    const PointCloud scan = synthetic::random_cloud(rng, 50, 5.0);
    const Vector3d t(1.0, 0.5, 0.0);
    const OdometryHistory h = history_of({Pose::Identity(), Pose::FromTranslation(t)});
    const std::vector<PointCloud> scans{scan, scan};
    const LocalMap map = build_local_map(h, std::span<const PointCloud>(scans), 10);
    ASSERT_EQ(map.cloud.size(), 100u);
    for (std::size_t i = 0; i < 50; ++i) {
        // Older scan first, placed into the latest frame.
        EXPECT_LE((map.cloud.points[i] + t - map.cloud.points[50 + i]).norm(), 1e-12);
        EXPECT_LE((map.cloud.points[50 + i] - scan.points[i]).norm(), 1e-12);
    }
}

TEST(BuildLocalMap, WindowKeepsTheLastScans) {
    std::mt19937_64 rng(3);
    std::vector<Pose> rel;
    std::vector<PointCloud> scans;
    for (int i = 0; i < 12; ++i) {
        rel.push_back(i == 0 ? Pose::Identity() : synthetic::random_pose(rng, 1.0, 3.0));
        PointCloud c;
        c.points.emplace_back(i, 0, 0);  // tag each scan by its frame
        scans.push_back(c);
    }
    const OdometryHistory h = history_of(rel);
    const LocalMap map = build_local_map(h, std::span<const PointCloud>(scans), 10);
    ASSERT_EQ(map.cloud.size(), 10u);
    const std::vector<std::size_t> expected{2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    EXPECT_EQ(map.frames, expected);
    const Pose to_latest = h.world_poses().back().inverse();
    for (std::size_t k = 0; k < 10; ++k) {
        const std::size_t frame = expected[k];
        const Vector3d placed = to_latest * (h.world_poses()[frame] * scans[frame].points[0]);
        EXPECT_LE((map.cloud.points[k] - placed).norm(), 1e-9);
    }
}

TEST(BuildLocalMap, VoxelizationBoundsTheAggregate) {
    std::mt19937_64 rng(4);
    const PointCloud scan = synthetic::random_cloud(rng, 2000, 2.0);
    const OdometryHistory h = history_of({Pose::Identity(), Pose::Identity(), Pose::Identity()});
    const std::vector<PointCloud> scans{scan, scan, scan};
    const LocalMap raw = build_local_map(h, std::span<const PointCloud>(scans), 10);
    const LocalMap voxelized = build_local_map(h, std::span<const PointCloud>(scans), 10, 0.5);
    EXPECT_EQ(raw.cloud.size(), 6000u);
    EXPECT_EQ(voxelized.cloud.size(), voxel_downsample(scan, 0.5).size());
}

TEST(BuildLocalMap, EmptyInputsGiveEmptyMap) {
    const OdometryHistory h = history_of({Pose::Identity()});
    EXPECT_TRUE(build_local_map(h, std::span<const PointCloud>(), 10).empty());
    EXPECT_TRUE(build_local_map(OdometryHistory{}, std::span<const PointCloud>(), 10).empty());
}

// ----------------------------------------------------------------- chamfer

TEST(ChamferDistance, SelfMatchIsZero) {
    std::mt19937_64 rng(5);
    const PointCloud c = synthetic::random_cloud(rng, 300, 5.0);
    EXPECT_EQ(chamfer_distance(c, map_of(c), Pose::Identity(), ScoringConfig{}), 0.0);
}

TEST(ChamferDistance, SinglePointMean) {
    PointCloud map_cloud, source;
    map_cloud.points = {Vector3d(0, 0, 0), Vector3d(5, 5, 5)};
    source.points = {Vector3d(0.3, 0, 0)};
    const auto d = chamfer_distance(source, map_of(map_cloud), Pose::Identity(), ScoringConfig{});
    ASSERT_TRUE(d);
    EXPECT_NEAR(*d, 0.3, 1e-15);
}

TEST(ChamferDistance, UnmatchedPointsAreDropped) {
    PointCloud map_cloud, source;
    map_cloud.points = {Vector3d(0, 0, 0)};
    source.points = {Vector3d(0.2, 0, 0), Vector3d(0, 0.4, 0), Vector3d(3, 0, 0)};
    const auto d = chamfer_distance(source, map_of(map_cloud), Pose::Identity(), ScoringConfig{});
    ASSERT_TRUE(d);
    EXPECT_NEAR(*d, 0.3, 1e-15);
}

TEST(ChamferDistance, InvalidOnEmptyMapOrLowMatchFraction) {
    PointCloud source;
    source.points = {Vector3d(0, 0, 0)};
    EXPECT_FALSE(chamfer_distance(source, LocalMap{}, Pose::Identity(), ScoringConfig{}));
    PointCloud map_cloud;
    map_cloud.points = {Vector3d(0, 0, 0)};
    PointCloud mostly_far;
    mostly_far.points.emplace_back(0.1, 0, 0);
    for (int i = 0; i < 19; ++i) mostly_far.points.emplace_back(10 + i, 0, 0);
    const LocalMap map = map_of(map_cloud);
    EXPECT_FALSE(chamfer_distance(mostly_far, map, Pose::Identity(), ScoringConfig{0.5, 0.1}));
    EXPECT_TRUE(chamfer_distance(mostly_far, map, Pose::Identity(), ScoringConfig{0.5, 0.05}));
    EXPECT_FALSE(chamfer_distance(PointCloud{}, map, Pose::Identity(), ScoringConfig{}));
}

TEST(ChamferDistance, MatchesBruteForceOnRandomPairs) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> size(1, 500);
    const ScoringConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const PointCloud map_cloud = synthetic::random_cloud(rng, static_cast<std::size_t>(size(rng)), 2.0);
        const PointCloud source = synthetic::random_cloud(rng, static_cast<std::size_t>(size(rng)), 2.0);
        const Pose t = synthetic::random_pose(rng, 0.5, 10.0);
        const auto got = chamfer_distance(source, map_of(map_cloud), t, cfg);
        const auto want = chamfer_oracle(source, map_cloud, t, cfg);
        ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
        if (got) EXPECT_NEAR(*got, *want, 1e-9) << "trial " << trial;
    }
}

TEST(ScoringConfig, Validation) {
    EXPECT_NO_THROW(ScoringConfig{}.validate());
    EXPECT_EQ(ScoringConfig{}.r_s, 0.5);
    EXPECT_THROW((ScoringConfig{0.0, 0.1}).validate(), std::invalid_argument);
    EXPECT_THROW((ScoringConfig{0.5, 0.0}).validate(), std::invalid_argument);
    EXPECT_THROW((ScoringConfig{0.5, 1.5}).validate(), std::invalid_argument);
}

// --------------------------------------------------------------- selection

PointCloud origin_cloud() {
    PointCloud c;
    c.points = {Vector3d::Zero()};
    return c;
}

TEST(SelectBest, SinglePassingProposalWins) {
    std::vector<TransformProposal> ps{proposal("gicp", Pose::Identity()), proposal("cvm", Pose::Identity())};
    ps[1].sanity = SanityVerdict::rejected_dynamic;
    EXPECT_EQ(select_best(ps, origin_cloud(), map_of(origin_cloud()), ScoringConfig{}), 0u);
}

TEST(SelectBest, LowestScoreWins) {
    std::vector<TransformProposal> ps{proposal("p2p_icp", Pose::FromTranslation(Vector3d(0.25, 0, 0))),
                                      proposal("ndt", Pose::FromTranslation(Vector3d(0.10, 0, 0))),
                                      proposal("cvm", Pose::FromTranslation(Vector3d(0.40, 0, 0)))};
    const std::size_t best = select_best(ps, origin_cloud(), map_of(origin_cloud()), ScoringConfig{});
    EXPECT_EQ(best, 1u);
    EXPECT_NEAR(*ps[0].chamfer, 0.25, 1e-15);
    EXPECT_NEAR(*ps[1].chamfer, 0.10, 1e-15);
}

TEST(SelectBest, FallsBackToCvmWithoutAnyValidScore) {
    std::vector<TransformProposal> ps{
        proposal("p2p_icp", Pose::FromTranslation(Vector3d(3, 0, 0)), SanityVerdict::rejected_dynamic),
        proposal("gicp", Pose::FromTranslation(Vector3d(0, 3, 0)), SanityVerdict::rejected_kinematic),
        proposal("cvm", Pose::Identity())};
    EXPECT_EQ(select_best(ps, origin_cloud(), LocalMap{}, ScoringConfig{}), 2u);
    for (const auto &p : ps) EXPECT_FALSE(p.chamfer.has_value());
}

TEST(SelectBest, ThrowsWithoutFallback) {
    std::vector<TransformProposal> ps{proposal("gicp", Pose::Identity())};
    EXPECT_THROW(select_best(ps, origin_cloud(), LocalMap{}, ScoringConfig{}), std::invalid_argument);
}

TEST(SelectBest, ChamferOnlyOnPassedProposals) {
    std::vector<TransformProposal> ps{proposal("p2p_icp", Pose::Identity(), SanityVerdict::rejected_kinematic),
                                      proposal("cvm", Pose::FromTranslation(Vector3d(0.2, 0, 0)))};
    ps[0].chamfer = 0.0;  // stale value must be cleared
    EXPECT_EQ(select_best(ps, origin_cloud(), map_of(origin_cloud()), ScoringConfig{}), 1u);
    EXPECT_FALSE(ps[0].chamfer.has_value());
}

TEST(SelectScored, TiesFollowEstimatorPriority) {
    const std::vector<std::string> order{"cvm", "huang", "ndt", "gicp", "p2p_icp"};
    std::vector<TransformProposal> ps;
    for (const auto &m : order) {
        ps.push_back(proposal(m, Pose::Identity()));
        ps.back().chamfer = 0.1;
    }
    EXPECT_EQ(ps[select_scored(ps)].method, "p2p_icp");
    ps.pop_back();
    EXPECT_EQ(ps[select_scored(ps)].method, "gicp");
    ps.pop_back();
    EXPECT_EQ(ps[select_scored(ps)].method, "ndt");
    ps.pop_back();
    EXPECT_EQ(ps[select_scored(ps)].method, "huang");
    EXPECT_LT(estimator_priority("p2p_icp"), estimator_priority("gicp"));
    EXPECT_LT(estimator_priority("ndt"), estimator_priority("some_plugin"));
    EXPECT_LT(estimator_priority("some_plugin"), estimator_priority("cvm"));
}

TEST(SelectScored, ArgminIsScaleInvariant) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> score(0.0, 1.0), scale(1e-3, 1e3);
    const std::vector<std::string> methods{"p2p_icp", "gicp", "ndt", "cvm"};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<TransformProposal> ps;
        for (const auto &m : methods) {
            ps.push_back(proposal(m, Pose::Identity()));
            if (score(rng) < 0.8) ps.back().chamfer = score(rng);
        }
        const std::size_t base = select_scored(ps);
        const double k = scale(rng);
        for (auto &p : ps) {
            if (p.chamfer) *p.chamfer *= k;
        }
        EXPECT_EQ(select_scored(ps), base);
    }
}

TEST(SelectScored, RejectedProposalsNeverWin) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::string> methods{"p2p_icp", "gicp", "ndt", "cvm"};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<TransformProposal> ps;
        bool any_passed_scored = false;
        for (const auto &m : methods) {
            const double r = u(rng);
            ps.push_back(proposal(m, Pose::Identity(),
                                  r < 0.3 ? SanityVerdict::rejected_dynamic
                                          : (r < 0.5 ? SanityVerdict::rejected_kinematic : SanityVerdict::passed)));
            // Scores on rejected proposals model a misbehaving caller.
            ps.back().chamfer = u(rng);
            any_passed_scored = any_passed_scored || ps.back().sanity == SanityVerdict::passed;
        }
        const std::size_t best = select_scored(ps);
        if (any_passed_scored) {
            EXPECT_EQ(ps[best].sanity, SanityVerdict::passed);
        } else {
            EXPECT_EQ(ps[best].method, "cvm");
        }
    }
}

TEST(SelectBest, PlantedWinnerBeatsPerturbedDecoys) {
    std::mt19937_64 rng(9);
    const ScoringConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        std::mt19937_64 scene_rng(100 + trial);
        const PointCloud map_cloud = voxel_downsample(synthetic::structured_scene(100 + trial).sample(20000, scene_rng), 0.25);
        const Pose truth = synthetic::random_pose(rng, 1.0, 5.0);
        std::mt19937_64 src_rng(200 + trial);
        const PointCloud source = apply(truth.inverse(), synthetic::structured_scene(100 + trial).sample(3000, src_rng));
        std::vector<TransformProposal> ps{proposal("ndt", truth)};
        for (int d = 0; d < 3; ++d) {
            const bool rotate = d % 2 == 0;
            const Vector3d axis = synthetic::random_unit_vector(rng);
            const Pose offset = rotate ? Pose::FromAxisAngle(axis * (2.0 * std::numbers::pi / 180.0))
                                       : Pose::FromTranslation(axis * 0.2);
            ps.push_back(proposal(d == 0 ? "p2p_icp" : (d == 1 ? "gicp" : "cvm"), compose(offset, truth)));
        }
        EXPECT_EQ(select_best(ps, source, map_of(map_cloud), cfg), 0u) << "trial " << trial;
    }
}

}  // namespace
}  // namespace redodom
