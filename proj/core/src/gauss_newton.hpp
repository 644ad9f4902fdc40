#pragma once

// Shared iteration driver for the ICP-family estimators.

#include <optional>
#include <string_view>

#include "redodom/pose.hpp"
#include "redodom/registration.hpp"

namespace redodom::detail {

/// Solves H x = -g. A rank-deficient H gets one damped retry with 1e-6 * I;
/// returns nullopt if that is still singular.
std::optional<Vector6d> solve_normal_equations(const Matrix6d &hessian, const Vector6d &gradient);

struct LinearSystem {
    Matrix6d hessian = Matrix6d::Zero();
    Vector6d gradient = Vector6d::Zero();
    double objective = 0.0;
};

// Problem requirements:
//   std::size_t associate(const Pose &T)      -- fix correspondences at T
//   LinearSystem linearize(const Pose &T)     -- over the fixed set
//   double objective(const Pose &T)           -- over the fixed set
//   double residual(double objective)         -- reported residual
//   static constexpr std::size_t kMinCorrespondences
template <typename Problem>
TransformProposal run_gauss_newton(std::string_view method, Problem &problem,
                                   const Pose &initial_guess, const EstimatorConfig &cfg,
                                   IterationLog *log) {
    constexpr int kMaxHalvings = 10;
    TransformProposal proposal = failed_proposal(method, initial_guess);
    Pose current = initial_guess;
    double last_objective = 0.0;
    for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
        proposal.iterations = iteration;
        const std::size_t matches = problem.associate(current);
        if (matches < Problem::kMinCorrespondences) {
            proposal.transform = current;
            proposal.converged = false;
            return proposal;
        }
        const LinearSystem system = problem.linearize(current);
        const auto step = solve_normal_equations(system.hessian, system.gradient);
        if (!step) {
            proposal.transform = current;
            proposal.converged = false;
            proposal.residual = problem.residual(system.objective);
            return proposal;
        }

        // Backtrack until the objective on the fixed correspondences does not increase.
        double scale = 1.0;
        Pose candidate = compose(Pose::FromIncrement(*step), current);
        double after = problem.objective(candidate);
        for (int h = 0; h < kMaxHalvings && after > system.objective; ++h) {
            scale *= 0.5;
            candidate = compose(Pose::FromIncrement(scale * *step), current);
            after = problem.objective(candidate);
        }
        const bool descended = after <= system.objective;
        if (!descended) {
            // No decrease along the Gauss-Newton direction: stationary to
            // floating-point precision.
            candidate = current;
            after = system.objective;
        }
        if (log != nullptr) {
            log->iterates.push_back(candidate);
            log->objective_before.push_back(system.objective);
            log->objective_after.push_back(after);
            log->correspondences.push_back(matches);
        }
        current = candidate;
        last_objective = after;
        const Vector6d applied = scale * *step;
        if (!descended || (applied.head<3>().norm() < cfg.convergence_rotation &&
                           applied.tail<3>().norm() < cfg.convergence_translation)) {
            proposal.converged = true;
            break;
        }
    }
    proposal.transform = current;
    proposal.residual = problem.residual(last_objective);
    return proposal;
}

}  // namespace redodom::detail
