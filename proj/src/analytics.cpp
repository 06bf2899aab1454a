#include "qce/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qce {

double shg_selfpulsing_threshold(double kappa_a, double kappa_b, double g) {
    if (!(g > 0.0)) throw std::invalid_argument("self-pulsing threshold needs g > 0");
    return (2.0 * kappa_a + kappa_b) / (2.0 * g) * std::sqrt(2.0 * kappa_b * (kappa_a + kappa_b));
}

double opo_threshold(double kappa_a, double kappa_b, double g) {
    if (!(g > 0.0)) throw std::invalid_argument("OPO threshold needs g > 0");
    return kappa_a * kappa_b / (2.0 * g);
}

ThresholdReport classify_shg(const ChiTwoParameters& p) {
    const double ec = shg_selfpulsing_threshold(p.kappa_a, p.kappa_b, p.g);
    return {ec, p.drive > ec ? Regime::above : Regime::below, ThresholdFormula::shg_self_pulsing};
}

ThresholdReport classify_opo(const ChiTwoParameters& p) {
    const double ec = opo_threshold(p.kappa_a, p.kappa_b, p.g);
    return {ec, p.drive > ec ? Regime::above : Regime::below, ThresholdFormula::opo};
}

G2Estimate g2_from_values(Complex number, Complex pair_number) {
    const double n = number.real();
    if (!(n > kVacuumFloor)) throw std::domain_error("g2 undefined: mode population below the vacuum floor");
    return {pair_number.real() / (n * n), pair_number.imag() / (n * n)};
}

G2Estimate g2_from_moments(const MomentODESystem& system, const MomentState& state, ModeIndex mode) {
    if (system.basis().max_order() < 4) throw std::invalid_argument("g2 needs a cluster basis of order M >= 4");
    std::vector<unsigned> powers(2 * (mode.id + 1), 0);
    powers[2 * mode.id] = 2;
    powers[2 * mode.id + 1] = 2;
    const Complex pair = system.moment(state.view(), Monomial::from_powers(powers));
    const Complex number = system.moment(state.view(), Monomial::number(mode));
    return g2_from_values(number, pair);
}

MomentState moment_state_from_density(const ClusterBasis& basis, const DensityMatrix& rho) {
    if (basis.mode_count() != rho.dims.mode_count()) throw std::invalid_argument("basis and density matrix disagree on mode count");
    MomentState s{Eigen::VectorXcd(static_cast<Eigen::Index>(basis.size())), 0.0};
    for (std::size_t i = 0; i < basis.size(); ++i) s.values(static_cast<Eigen::Index>(i)) = expectation(rho, basis[i]);
    return s;
}

bool detect_self_pulsing(std::span<const double> times, std::span<const double> series, double settle_fraction) {
    if (times.size() != series.size()) throw std::invalid_argument("times and series differ in length");
    if (times.empty()) return false;
    if (!(settle_fraction > 0.0 && settle_fraction <= 1.0)) throw std::invalid_argument("settle_fraction must be in (0, 1]");
    const double t_start = times.back() - settle_fraction * (times.back() - times.front());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_start) continue;
        lo = std::min(lo, series[i]);
        hi = std::max(hi, series[i]);
    }
    const double scale = std::max(std::abs(hi), std::abs(lo));
    if (!(scale > 0.0)) return false;
    return (hi - lo) / scale > kSelfPulsingThreshold;
}

std::vector<double> photon_number_series(const Trajectory& traj, const MomentODESystem& system, ModeIndex mode) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    const Monomial number = Monomial::number(mode);
    for (const auto& s : traj.states) out.push_back(system.moment(s.view(), number).real());
    return out;
}

bool detect_self_pulsing(const Trajectory& traj, const MomentODESystem& system, ModeIndex mode, double settle_fraction) {
    const auto series = photon_number_series(traj, system, mode);
    return detect_self_pulsing(traj.times, series, settle_fraction);
}

double bisect_transition(const std::function<bool(double)>& indicator, double lo, double hi, double rel_width) {
    if (!(lo < hi)) throw std::invalid_argument("bisection needs lo < hi");
    if (indicator(lo) || !indicator(hi)) throw std::invalid_argument("indicator does not bracket a transition");
    while (hi - lo > rel_width * std::abs(hi)) {
        const double mid = 0.5 * (lo + hi);
        (indicator(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

bool mfa_opo_oscillates(const ChiTwoParameters& p, double horizon, double seed) {
    const auto system = build_system(opo_model(p), 1);
    MomentState start = vacuum_state(system.basis());
    start.values(static_cast<Eigen::Index>(system.basis().locate(Monomial::annihilation(kModeA)).position)) =
        Complex(0.0, seed);
    const Trajectory traj = integrate(system, start, horizon, Tolerances{1e-10, 1e-14}, 3);
    if (traj.divergence.diverged) return true;
    const Monomial number = Monomial::number(kModeA);
    const double mid = system.moment(traj.states[1].view(), number).real();
    const double end = system.moment(traj.states[2].view(), number).real();
    // Far below threshold the seed decays into the absolute tolerance, where
    // the sign of end − mid is noise.
    constexpr double resolved = 1e-20;
    return end > 100.0 * seed * seed || (mid > resolved && end > mid);
}

bool mfa_shg_self_pulses(const ChiTwoParameters& p, double horizon, double seed) {
    const auto system = build_system(shg_model(p), 1);
    MomentState start = vacuum_state(system.basis());
    start.values(static_cast<Eigen::Index>(system.basis().locate(Monomial::annihilation(kModeA)).position)) = seed;
    const Trajectory traj = integrate(system, start, horizon, Tolerances{1e-9, 1e-12},
                                      static_cast<std::size_t>(20 * horizon) + 1);
    if (traj.divergence.diverged) return true;
    return detect_self_pulsing(traj, system, kModeA);
}

} // namespace qce
