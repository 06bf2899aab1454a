#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

namespace qce {

struct Tolerances {
    double rel = 1e-8;
    double abs = 1e-10;
};

/// Outcome flags of an integration run. A diverged run is truncated at
/// `time`; all samples before it are valid.
struct Divergence {
    bool diverged = false;
    double time = 0.0;
    std::string reason;
};

struct IntegrationStats {
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t rhs_evaluations = 0;
};

struct IntegratorLimits {
    double divergence_bound = 1e12;
    std::size_t max_steps = 50'000'000;
    double initial_step = 0.0; // 0: choose automatically
};

/// Weighted RMS error over complex entries stored as (re, im) pairs:
/// √mean(|err_i|² / (abs + rel·|y_i|)²). Plugged into odeint's controller in
/// place of its max norm, which tracks the single worst entry of a density
/// matrix and roughly doubles the step count.
struct RmsErrorChecker {
    using value_type = double;
    using algebra_type = boost::numeric::odeint::vector_space_algebra;
    using operations_type = boost::numeric::odeint::default_operations;

    double abs = 1e-10, rel = 1e-8;

    template <class State, class Deriv, class Err, class Time>
    double error(algebra_type&, const State& x_old, const Deriv&, Err& x_err, Time) const {
        const Eigen::Index m = x_old.size() / 2;
        if (m == 0) return 0.0;
        const Eigen::Map<const Eigen::Matrix2Xd> x(x_old.data(), 2, m), e(x_err.data(), 2, m);
        const Eigen::ArrayXd scale = abs + rel * x.colwise().norm().array().transpose();
        return std::sqrt((e.colwise().squaredNorm().array().transpose() / scale.square()).mean());
    }
};

/// Adaptive Dormand–Prince 5(4) from Boost.Odeint, driven step by step so
/// that it lands exactly on every sample time and stops on blow-up.
///
/// `State` is a complex Eigen dense type (vectors for moment systems,
/// matrices for density matrices); odeint sees its real and imaginary parts
/// as one real vector. `rhs(t, y, dydt)` writes the derivative and
/// `observe(t, y)` is called at each entry of `sample_times` (strictly
/// increasing, all > t0).
template <class State, class Rhs, class Observer>
std::pair<Divergence, IntegrationStats> integrate_dormand_prince(Rhs&& rhs, const State& y0, double t0,
                                                                 std::span<const double> sample_times,
                                                                 const Tolerances& tol, Observer&& observe,
                                                                 const IntegratorLimits& limits = {}) {
    namespace ode = boost::numeric::odeint;
    using Real = Eigen::VectorXd;
    using Stepper = ode::runge_kutta_dopri5<Real, double, Real, double, ode::vector_space_algebra>;

    Divergence div;
    IntegrationStats stats;
    if (sample_times.empty()) return {div, stats};

    const Eigen::Index n = 2 * y0.size();
    auto real_view = [n](auto& s) { return Eigen::Map<Real>(reinterpret_cast<double*>(s.data()), n); };
    auto const_view = [n](const auto& s) { return Eigen::Map<const Real>(reinterpret_cast<const double*>(s.data()), n); };

    State y = y0, dy = y0;
    auto system = [&](const Real& x, Real& dxdt, double t) {
        real_view(y) = x;
        rhs(t, y, dy);
        dxdt = const_view(dy);
        ++stats.rhs_evaluations;
    };

    Real x = const_view(y0), dxdt(n);
    double t = t0;
    system(x, dxdt, t);

    double h = limits.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic.
        const double d0 = std::max(x.size() ? x.cwiseAbs().maxCoeff() : 0.0, 1e-300);
        const double d1 = std::max(dxdt.size() ? dxdt.cwiseAbs().maxCoeff() : 0.0, 1e-300);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, sample_times.back() - t0);
        h = std::max(h, 1e-12 * std::max(1.0, std::abs(sample_times.back())));
    }

    using Controlled = ode::controlled_runge_kutta<Stepper, RmsErrorChecker, ode::default_step_adjuster<double, double>,
                                                   ode::initially_resizer, ode::explicit_error_stepper_fsal_tag>;
    Controlled controlled(RmsErrorChecker{tol.abs, tol.rel});
    std::size_t next_sample = 0;
    while (next_sample < sample_times.size()) {
        const double target = sample_times[next_sample];
        if (stats.accepted_steps + stats.rejected_steps >= limits.max_steps) {
            div = {true, t, "step budget exhausted"};
            break;
        }
        const double min_step = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (!(h >= min_step)) {
            div = {true, t, "step size underflow"};
            break;
        }
        const bool lands = t + h >= target - min_step;
        double step = lands ? target - t : h;
        if (controlled.try_step(system, x, dxdt, t, step) == ode::fail) {
            ++stats.rejected_steps;
            h = step;
            continue;
        }
        ++stats.accepted_steps;
        const double peak = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
        if (!std::isfinite(peak) || peak > limits.divergence_bound) {
            div = {true, t, "moment magnitude exceeded divergence bound"};
            break;
        }
        // A step shortened to hit a sample does not shrink the proposal.
        h = lands ? std::max(h, step) : step;
        if (lands) {
            t = target;
            real_view(y) = x;
            observe(t, y);
            ++next_sample;
        }
    }
    return {div, stats};
}

} // namespace qce
