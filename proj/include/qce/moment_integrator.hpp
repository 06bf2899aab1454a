#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qce/cluster_engine.hpp"
#include "qce/dormand_prince.hpp"

namespace qce {

/// Cluster expectation values aligned to a ClusterBasis, at time `time`
/// (units of 1/κ_a).
struct MomentState {
    Eigen::VectorXcd values;
    double time = 0.0;

    std::span<const Complex> view() const { return {values.data(), static_cast<std::size_t>(values.size())}; }
};

/// All moments zero: the two-mode vacuum in normal order.
MomentState vacuum_state(const ClusterBasis& basis);

/// Elementwise complex conjugate of the state.
MomentState conjugate(const MomentState& s);

struct Trajectory {
    std::vector<double> times;
    std::vector<MomentState> states;
    Divergence divergence;
    IntegrationStats stats;

    const MomentState& final_state() const { return states.back(); }
};

inline constexpr std::size_t kDefaultSamples = 201;

/// Integrates from `initial` over [initial.time, initial.time + horizon],
/// sampling at `samples` evenly spaced points including both ends. A
/// diverged run keeps the samples reached before divergence.
Trajectory integrate(const MomentODESystem& system, const MomentState& initial, double horizon,
                     const Tolerances& tol = {}, std::size_t samples = kDefaultSamples);

struct SteadyStateResult {
    MomentState state;
    /// RMS of d⟨·⟩/dt at the final state; small when the run has settled.
    double residual_norm = 0.0;
    Divergence divergence;
    IntegrationStats stats;
};

inline constexpr double kDefaultSteadyHorizon = 10.0;

/// State at t = T_ss from vacuum (or from `initial` when given).
SteadyStateResult steady_state(const MomentODESystem& system, double horizon = kDefaultSteadyHorizon,
                               const Tolerances& tol = {}, const std::optional<MomentState>& initial = std::nullopt);

/// RMS norm of the right-hand side at `state`.
double rhs_residual(const MomentODESystem& system, const MomentState& state);

} // namespace qce
