#include "qce/moment_integrator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qce {

MomentState vacuum_state(const ClusterBasis& basis) {
    return {Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size())), 0.0};
}

MomentState conjugate(const MomentState& s) { return {s.values.conjugate(), s.time}; }

namespace {

std::vector<double> sample_grid(double t0, double horizon, std::size_t samples) {
    if (!(horizon > 0.0)) throw std::invalid_argument("integration horizon must be positive");
    if (samples < 2) throw std::invalid_argument("at least two samples required");
    std::vector<double> times(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        times[i] = t0 + horizon * static_cast<double>(i) / static_cast<double>(samples - 1);
    }
    return times;
}

void check_tolerances(const Tolerances& tol) {
    if (!(tol.rel > 0.0) || !(tol.abs > 0.0)) throw std::invalid_argument("tolerances must be positive");
}

} // namespace

Trajectory integrate(const MomentODESystem& system, const MomentState& initial, double horizon,
                     const Tolerances& tol, std::size_t samples) {
    check_tolerances(tol);
    if (static_cast<std::size_t>(initial.values.size()) != system.size()) {
        throw std::invalid_argument("initial state does not match the system basis");
    }
    const auto grid = sample_grid(initial.time, horizon, samples);

    Trajectory traj;
    traj.times.reserve(samples);
    traj.states.reserve(samples);
    traj.times.push_back(grid.front());
    traj.states.push_back(initial);

    auto rhs = [&system](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt) {
        system.evaluate({y.data(), static_cast<std::size_t>(y.size())},
                        {dydt.data(), static_cast<std::size_t>(dydt.size())});
    };
    auto observe = [&traj](double t, const Eigen::VectorXcd& y) {
        traj.times.push_back(t);
        traj.states.push_back({y, t});
    };
    auto [div, stats] = integrate_dormand_prince(rhs, initial.values, grid.front(),
                                                 std::span<const double>(grid).subspan(1), tol, observe);
    traj.divergence = std::move(div);
    traj.stats = stats;
    return traj;
}

double rhs_residual(const MomentODESystem& system, const MomentState& state) {
    Eigen::VectorXcd d(state.values.size());
    system.evaluate(state.view(), {d.data(), static_cast<std::size_t>(d.size())});
    if (d.size() == 0) return 0.0;
    return std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
}

SteadyStateResult steady_state(const MomentODESystem& system, double horizon, const Tolerances& tol,
                               const std::optional<MomentState>& initial) {
    const MomentState start = initial ? *initial : vacuum_state(system.basis());
    // Only the end point is needed; two samples keep the integrator unconstrained.
    Trajectory traj = integrate(system, start, horizon, tol, 2);
    SteadyStateResult out;
    out.state = traj.final_state();
    out.divergence = traj.divergence;
    out.stats = traj.stats;
    out.residual_norm = traj.divergence.diverged ? std::numeric_limits<double>::infinity()
                                                 : rhs_residual(system, out.state);
    return out;
}

} // namespace qce
