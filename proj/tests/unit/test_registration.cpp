#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <numbers>
#include <random>

#include "redodom/registration.hpp"
#include "synthetic.hpp"

namespace redodom {
namespace {

using Eigen::Vector3d;
using synthetic::rotation_error_deg;
using synthetic::translation_error;

constexpr double kDeg = std::numbers::pi / 180.0;

struct Pair {
    PointCloud source;
    PointCloud target;
};

// Target sampled from a structured scene; source is the same points seen
// from the pose `truth`, so target = truth * source exactly.
Pair scene_pair(std::uint64_t seed, std::size_t n, const Pose &truth, const EstimatorConfig &cfg) {
    std::mt19937_64 rng(seed);
    PointCloud target = synthetic::structured_scene(seed).sample(n, rng);
    PointCloud source = apply(truth.inverse(), target);
    target = estimate_covariances(estimate_normals(target, cfg.normal_neighbors), cfg.covariance_neighbors,
                                  cfg.gicp_epsilon);
    source = estimate_covariances(source, cfg.covariance_neighbors, cfg.gicp_epsilon);
    return {source, target};
}

// ---------------------------------------------------------------- p2p_icp

TEST(P2PIcp, IdenticalCloudsStayAtIdentity) {
    const EstimatorConfig cfg;
    const Pair p = scene_pair(1, 6000, Pose::Identity(), cfg);
    const TransformProposal r = p2p_icp_estimate(p.target, p.target, Pose::Identity(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(translation_error(r.transform, Pose::Identity()), 1e-9);
    EXPECT_LE((r.transform.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(r.method, "p2p_icp");
}

TEST(P2PIcp, RecoversPlanarSceneDisplacement) {
    const EstimatorConfig cfg;
    const Pose truth = Pose::FromYaw(1.0 * kDeg, Vector3d(0.1, 0.05, 0.0));
    const Pair p = scene_pair(2, 6000, truth, cfg);
    const TransformProposal r = p2p_icp_estimate(p.source, p.target, Pose::Identity(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(translation_error(r.transform, truth), 1e-3);
    EXPECT_LE(rotation_error_deg(r.transform, truth), 0.01);
}

TEST(P2PIcp, DisjointCloudsFailAtInitialGuess) {
    const EstimatorConfig cfg;
    const Pair p = scene_pair(3, 2000, Pose::Identity(), cfg);
    const PointCloud far = apply(Pose::FromTranslation(Vector3d(500, 0, 0)), p.target);
    const Pose guess = Pose::FromYaw(0.1, Vector3d(1, 2, 3));
    const TransformProposal r = p2p_icp_estimate(far, p.target, guess, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.transform.matrix(), guess.matrix());
}

TEST(P2PIcp, MissingNormalsOrEmptyInputFail) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(4);
    const PointCloud bare = synthetic::random_cloud(rng, 100, 2.0);
    EXPECT_FALSE(p2p_icp_estimate(bare, bare, Pose::Identity(), cfg).converged);
    EXPECT_FALSE(p2p_icp_estimate(PointCloud{}, bare, Pose::Identity(), cfg).converged);
}

TEST(P2PIcp, ObjectiveNeverIncreasesWithinAnIteration) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(5);
    for (int seed = 0; seed < 5; ++seed) {
        const Pose truth = synthetic::random_pose(rng, 0.5, 2.0);
        const Pair p = scene_pair(50 + seed, 5000, truth, cfg);
        const KdTree index(p.target.points);
        IterationLog log;
        p2p_icp_estimate(p.source, p.target, index, Pose::Identity(), cfg, &log);
        ASSERT_FALSE(log.iterates.empty());
        for (std::size_t i = 0; i < log.iterates.size(); ++i) {
            EXPECT_LE(log.objective_after[i], log.objective_before[i]) << "seed " << seed << " it " << i;
        }
    }
}

TEST(P2PIcp, RecoversRandomPlantedTransforms) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(6);
    for (int seed = 0; seed < 5; ++seed) {
        const Pose truth = synthetic::random_pose(rng, 0.5, 2.0);
        const Pair p = scene_pair(60 + seed, 5000, truth, cfg);
        const TransformProposal r = p2p_icp_estimate(p.source, p.target, Pose::Identity(), cfg);
        EXPECT_LE(translation_error(r.transform, truth), 1e-2) << "seed " << seed;
        EXPECT_LE(rotation_error_deg(r.transform, truth), 0.1) << "seed " << seed;
    }
}

// ------------------------------------------------------------------- gicp

TEST(Gicp, IdenticalCloudsStayAtIdentity) {
    const EstimatorConfig cfg;
    const Pair p = scene_pair(7, 6000, Pose::Identity(), cfg);
    const TransformProposal r = gicp_estimate(p.target, p.target, Pose::Identity(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(translation_error(r.transform, Pose::Identity()), 1e-9);
    EXPECT_LE((r.transform.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Gicp, RecoversPlanarSceneDisplacement) {
    const EstimatorConfig cfg;
    const Pose truth = Pose::FromYaw(1.0 * kDeg, Vector3d(0.1, 0.05, 0.0));
    const Pair p = scene_pair(8, 6000, truth, cfg);
    const TransformProposal r = gicp_estimate(p.source, p.target, Pose::Identity(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(translation_error(r.transform, truth), 1e-3);
    EXPECT_LE(rotation_error_deg(r.transform, truth), 0.01);
}

TEST(Gicp, ObjectiveNeverIncreasesWithinAnIteration) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(9);
    for (int seed = 0; seed < 5; ++seed) {
        const Pose truth = synthetic::random_pose(rng, 0.5, 2.0);
        const Pair p = scene_pair(90 + seed, 5000, truth, cfg);
        const KdTree index(p.target.points);
        IterationLog log;
        gicp_estimate(p.source, p.target, index, Pose::Identity(), cfg, &log);
        ASSERT_FALSE(log.iterates.empty());
        for (std::size_t i = 0; i < log.iterates.size(); ++i) {
            EXPECT_LE(log.objective_after[i], log.objective_before[i]) << "seed " << seed << " it " << i;
        }
    }
}

// Independent point-to-point ICP: exhaustive correspondences and a stacked
// least-squares solve of the linearized residual q - (I + [w]x) T s - v.
std::vector<Pose> point_to_point_iterates(const PointCloud &source, const PointCloud &target, Pose pose,
                                          std::size_t iterations, double max_distance) {
    std::vector<Pose> iterates;
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<std::pair<Vector3d, Vector3d>> matches;
        for (const auto &s : source.points) {
            const Vector3d p = pose * s;
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t j = 0; j < target.size(); ++j) {
                const double d = (target.points[j] - p).norm();
                if (d < best) {
                    best = d;
                    arg = j;
                }
            }
            if (best <= max_distance) matches.emplace_back(p, target.points[arg]);
        }
        Eigen::MatrixXd a(3 * matches.size(), 6);
        Eigen::VectorXd b(3 * matches.size());
        for (std::size_t i = 0; i < matches.size(); ++i) {
            const auto &[p, q] = matches[i];
            const Vector3d e = q - p;
            // d(e)/d(w) = -(w x p)' = p x (.)  ->  [p]x ; d(e)/d(v) = -I
            a.block<3, 3>(3 * i, 0) << 0, -p.z(), p.y(), p.z(), 0, -p.x(), -p.y(), p.x(), 0;
            a.block<3, 3>(3 * i, 3) = -Eigen::Matrix3d::Identity();
            b.segment<3>(3 * i) = -e;
        }
        const Eigen::VectorXd delta = a.colPivHouseholderQr().solve(b);
        const Vector3d w = delta.head<3>();
        const double angle = w.norm();
        Pose step;
        if (angle > 0) step.rotation = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
        step.translation = delta.tail<3>();
        pose = Pose::FromMatrix(step.matrix() * pose.matrix());
        iterates.push_back(pose);
    }
    return iterates;
}

TEST(Gicp, UnitEpsilonMatchesPointToPointIcp) {
    EstimatorConfig cfg;
    cfg.gicp_epsilon = 1.0;
    const Pose truth = Pose::FromAxisAngle(Vector3d(0.01, -0.02, 0.03), Vector3d(0.2, -0.1, 0.05));
    const Pair p = scene_pair(10, 1500, truth, cfg);
    const KdTree index(p.target.points);
    IterationLog log;
    const Pose guess = Pose::FromYaw(0.002, Vector3d(0.01, 0, 0));
    gicp_estimate(p.source, p.target, index, guess, cfg, &log);
    ASSERT_GE(log.iterates.size(), 2u);
    const auto reference =
        point_to_point_iterates(p.source, p.target, guess, log.iterates.size(), cfg.max_correspondence_distance);
    for (std::size_t i = 0; i < reference.size(); ++i) {
        EXPECT_LE((log.iterates[i].matrix() - reference[i].matrix()).cwiseAbs().maxCoeff(), 1e-6) << "iterate " << i;
    }
}

TEST(Gicp, MissingCovariancesFail) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(11);
    const PointCloud bare = synthetic::random_cloud(rng, 100, 2.0);
    const Pose guess = Pose::FromTranslation(Vector3d(1, 0, 0));
    const TransformProposal r = gicp_estimate(bare, bare, guess, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.transform.matrix(), guess.matrix());
}

TEST(Gicp, RankDeficientSystemDoesNotDiverge) {
    // Every source point at one location: the 6x6 system has rank 3 and
    // needs the damped retry.
    EstimatorConfig cfg;
    PointCloud cloud;
    for (int i = 0; i < 10; ++i) cloud.points.emplace_back(1.0, 2.0, 3.0);
    cloud = estimate_covariances(cloud, 4, cfg.gicp_epsilon);
    const TransformProposal r = gicp_estimate(cloud, cloud, Pose::Identity(), cfg);
    EXPECT_TRUE(r.transform.matrix().allFinite());
    EXPECT_LE(translation_error(r.transform, Pose::Identity()), 1e-9);
}

// -------------------------------------------------------------------- ndt

TEST(Ndt, GridExcludesSparseCellsAndFloorsEigenvalues) {
    const PointCloud lattice = synthetic::lattice_scene();
    const NdtGrid grid(lattice, 1.0);
    EXPECT_GT(grid.cell_count(), 300u);
    const NdtCell *floor = grid.lookup(Vector3d(0.5, 0.5, -1.5));
    ASSERT_NE(floor, nullptr);
    EXPECT_EQ(floor->count, 48u);
    EXPECT_LE((floor->mean - Vector3d(0.5, 0.5, -1.5)).norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> s(floor->covariance);
    EXPECT_GE(s.eigenvalues().minCoeff(), 1e-3 * s.eigenvalues().maxCoeff() - 1e-15);
    EXPECT_EQ(grid.lookup(Vector3d(0.5, 0.5, 5.5)), nullptr);

    PointCloud sparse;
    for (int i = 0; i < 4; ++i) sparse.points.emplace_back(0.1 * i, 0.2, 0.3);
    EXPECT_EQ(NdtGrid(sparse, 1.0).cell_count(), 0u);
    // Collinear cell: largest eigenvalue > 0, the others are floored.
    PointCloud line;
    for (int i = 0; i < 6; ++i) line.points.emplace_back(0.1 + 0.1 * i, 0.5, 0.5);
    const NdtGrid line_grid(line, 1.0);
    ASSERT_EQ(line_grid.cell_count(), 1u);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ls(line_grid.lookup(Vector3d(0.5, 0.5, 0.5))->covariance);
    EXPECT_NEAR(ls.eigenvalues()[0], 1e-3 * ls.eigenvalues()[2], 1e-15);
    EXPECT_THROW(NdtGrid(line, 0.0), std::invalid_argument);
}

TEST(Ndt, IdenticalDenseCloudsStayAtIdentity) {
    const EstimatorConfig cfg;
    const PointCloud lattice = synthetic::lattice_scene();
    const TransformProposal r = ndt_estimate(lattice, lattice, Pose::Identity(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(translation_error(r.transform, Pose::Identity()), 1e-6);
    EXPECT_LE((r.transform.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Ndt, RecoversSubCellDisplacement) {
    const EstimatorConfig cfg;
    const PointCloud lattice = synthetic::lattice_scene();
    const NdtGrid grid(lattice, cfg.ndt_cell_size);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const Pose truth = synthetic::random_pose(rng, 0.2, 1.0);
        const PointCloud source = apply(truth.inverse(), lattice);
        const TransformProposal r = ndt_estimate(source, grid, Pose::Identity(), cfg);
        EXPECT_LE(translation_error(r.transform, truth), 5e-3) << "trial " << trial;
        EXPECT_LE(rotation_error_deg(r.transform, truth), 0.05) << "trial " << trial;
    }
}

TEST(Ndt, UnderPopulatedTargetFails) {
    const EstimatorConfig cfg;
    PointCloud tiny;
    tiny.points = {Vector3d(0.1, 0.1, 0.1), Vector3d(0.2, 0.1, 0.1), Vector3d(0.3, 0.2, 0.1)};
    const Pose guess = Pose::FromTranslation(Vector3d(0.5, 0, 0));
    const TransformProposal r = ndt_estimate(tiny, tiny, guess, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.transform.matrix(), guess.matrix());
}

// -------------------------------------------------------------------- cvm

OdometryHistory history_of(const std::vector<Pose> &relative) {
    OdometryHistory h;
    double t = 0.0;
    for (const auto &r : relative) h.append(r, t += 0.1, "p2p_icp", 0.1);
    return h;
}

TEST(Cvm, EmptyHistoryGivesIdentity) {
    const TransformProposal r = cvm_estimate(OdometryHistory{});
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.transform.matrix(), Eigen::Matrix4d::Identity());
    EXPECT_EQ(r.method, "cvm");
}

TEST(Cvm, RepeatsLastSelectedTransformExactly) {
    std::mt19937_64 rng(13);
    std::vector<Pose> rel;
    for (int i = 0; i < 5; ++i) rel.push_back(synthetic::random_pose(rng, 2.0, 5.0));
    const TransformProposal r = cvm_estimate(history_of(rel));
    EXPECT_EQ(r.transform.matrix(), rel.back().matrix());
    rel[1] = synthetic::random_pose(rng, 2.0, 5.0);
    EXPECT_EQ(cvm_estimate(history_of(rel)).transform.matrix(), rel.back().matrix());
}

TEST(Cvm, IgnoresClouds) {
    std::mt19937_64 rng(14);
    const OdometryHistory h = history_of({Pose::Identity(), Pose::FromTranslation(Vector3d(1, 0, 0))});
    const auto cvm = make_estimator("cvm");
    const EstimatorConfig cfg;
    const PreparedScan a = prepare_scan(synthetic::random_cloud(rng, 200, 3.0), cfg);
    const PreparedScan b = prepare_scan(synthetic::random_cloud(rng, 300, 3.0), cfg);
    const PreparedScan empty;
    const Pose guess = Pose::FromYaw(0.3);
    const auto r1 = cvm->estimate({2, &a, &b, &h}, guess, cfg);
    const auto r2 = cvm->estimate({2, &empty, &empty, &h}, Pose::Identity(), cfg);
    EXPECT_EQ(r1.transform.matrix(), r2.transform.matrix());
    EXPECT_EQ(r1.transform.matrix(), h.relative_transforms().back().matrix());
}

// -------------------------------------------------------------- interface

TEST(EstimatorInterface, BuiltInsByName) {
    for (const char *id : {"p2p_icp", "gicp", "ndt", "cvm"}) EXPECT_EQ(make_estimator(id)->id(), id);
    EXPECT_THROW(make_estimator("huang"), std::invalid_argument);
    EXPECT_THROW(make_estimator("color_icp"), std::invalid_argument);
    EXPECT_THROW(make_estimator("nope"), std::invalid_argument);
}

TEST(EstimatorInterface, EmptyInputsGiveFailedProposalsNotExceptions) {
    const EstimatorConfig cfg;
    const OdometryHistory h;
    const PreparedScan empty;
    const Pose guess = Pose::FromYaw(0.2, Vector3d(1, 0, 0));
    for (const char *id : {"p2p_icp", "gicp", "ndt"}) {
        const auto r = make_estimator(id)->estimate({0, &empty, &empty, &h}, guess, cfg);
        EXPECT_FALSE(r.converged) << id;
        EXPECT_EQ(r.transform.matrix(), guess.matrix()) << id;
        EXPECT_EQ(r.method, id);
    }
}

TEST(EstimatorInterface, EstimatesAreBitwiseDeterministic) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(15);
    const Pose truth = synthetic::random_pose(rng, 0.4, 2.0);
    std::mt19937_64 scene_rng(16);
    const PointCloud target_raw = synthetic::structured_scene(16).sample(4000, scene_rng);
    const PreparedScan target = prepare_scan(target_raw, cfg);
    const PreparedScan source = prepare_scan(apply(truth.inverse(), target_raw), cfg);
    const OdometryHistory h;
    for (const char *id : {"p2p_icp", "gicp", "ndt"}) {
        const auto e = make_estimator(id);
        const auto a = e->estimate({1, &source, &target, &h}, Pose::Identity(), cfg);
        const auto b = e->estimate({1, &source, &target, &h}, Pose::Identity(), cfg);
        EXPECT_EQ(a.transform.matrix(), b.transform.matrix()) << id;
        EXPECT_EQ(a.iterations, b.iterations) << id;
        EXPECT_EQ(a.residual, b.residual) << id;
    }
}

TEST(EstimatorInterface, PreparedScanCarriesSharedFeatures) {
    const EstimatorConfig cfg;
    std::mt19937_64 rng(17);
    const PreparedScan s = prepare_scan(synthetic::structured_scene(17).sample(2000, rng), cfg);
    EXPECT_TRUE(s.cloud.has_normals());
    EXPECT_TRUE(s.cloud.has_covariances());
    ASSERT_TRUE(s.index);
    ASSERT_TRUE(s.ndt_grid);
    EXPECT_EQ(s.index->size(), 2000u);
    const PreparedScan small = prepare_scan(synthetic::random_cloud(rng, 5, 1.0), cfg);
    EXPECT_FALSE(small.cloud.has_normals());
    EXPECT_TRUE(prepare_scan(PointCloud{}, cfg).empty());
}

TEST(EstimatorConfig, ValidationRejectsNonPositiveFields) {
    EXPECT_NO_THROW(EstimatorConfig{}.validate());
    auto bad = [](auto mutate) {
        EstimatorConfig c;
        mutate(c);
        return c;
    };
    EXPECT_THROW(bad([](auto &c) { c.max_iterations = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](auto &c) { c.convergence_translation = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](auto &c) { c.convergence_rotation = -1; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](auto &c) { c.max_correspondence_distance = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](auto &c) { c.ndt_cell_size = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](auto &c) { c.gicp_epsilon = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](auto &c) { c.ndt_outlier_ratio = 1.0; }).validate(), std::invalid_argument);
}

TEST(SanityVerdictNames, RoundTrip) {
    for (auto v : {SanityVerdict::untested, SanityVerdict::passed, SanityVerdict::rejected_dynamic,
                   SanityVerdict::rejected_kinematic}) {
        EXPECT_EQ(verdict_from_string(to_string(v)), v);
    }
    EXPECT_THROW(verdict_from_string("maybe"), std::invalid_argument);
}

}  // namespace
}  // namespace redodom
