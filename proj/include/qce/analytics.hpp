#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qce/cluster_engine.hpp"
#include "qce/fst_reference.hpp"
#include "qce/model.hpp"
#include "qce/moment_integrator.hpp"

namespace qce {

enum class Regime { below, above };
enum class ThresholdFormula { shg_self_pulsing, opo };

struct ThresholdReport {
    double critical_drive = 0.0;
    Regime regime = Regime::below;
    ThresholdFormula formula = ThresholdFormula::opo;
};

/// Mean-field self-pulsing onset of SHG:
/// E_c = (2κ_a + κ_b)/(2g) · √(2κ_b(κ_a + κ_b)). Throws for g ≤ 0.
double shg_selfpulsing_threshold(double kappa_a, double kappa_b, double g);

/// Classical OPO threshold E_c = κ_a κ_b / (2g). Throws for g ≤ 0.
double opo_threshold(double kappa_a, double kappa_b, double g);

ThresholdReport classify_shg(const ChiTwoParameters& p);
ThresholdReport classify_opo(const ChiTwoParameters& p);

/// Normalized equal-time correlation with the imaginary part of ⟨O†²O²⟩/⟨O†O⟩²
/// kept as a truncation diagnostic.
struct G2Estimate {
    double value = 0.0;
    double imaginary_residue = 0.0;
};

/// g(2) from a moment state. Requires M ≥ 4 (std::invalid_argument) and
/// ⟨O†O⟩ > 1e-10 (std::domain_error).
G2Estimate g2_from_moments(const MomentODESystem& system, const MomentState& state, ModeIndex mode);

/// Expectations of every basis representative in ρ, so FST results can be
/// fed through the moment-based observables.
MomentState moment_state_from_density(const ClusterBasis& basis, const DensityMatrix& rho);

/// Same formula from raw moments ⟨O†O⟩ and ⟨O†²O²⟩.
G2Estimate g2_from_values(Complex number, Complex pair_number);

/// Peak-to-peak threshold on the relative excursion of ⟨O†O⟩ in the settle window.
inline constexpr double kSelfPulsingThreshold = 1e-3;

/// True when the relative peak-to-peak excursion of `series` over the final
/// `settle_fraction` of the time span exceeds 1e-3.
bool detect_self_pulsing(std::span<const double> times, std::span<const double> series, double settle_fraction = 0.5);

/// Applies detect_self_pulsing to ⟨O†O⟩ along a moment trajectory.
bool detect_self_pulsing(const Trajectory& traj, const MomentODESystem& system, ModeIndex mode,
                         double settle_fraction = 0.5);

/// ⟨O†O⟩ (real part) at every sample of a trajectory.
std::vector<double> photon_number_series(const Trajectory& traj, const MomentODESystem& system, ModeIndex mode);

/// Bisection for the point where a monotone indicator switches from false
/// (at `lo`) to true (at `hi`); stops when the bracket is below rel_width·hi.
double bisect_transition(const std::function<bool(double)>& indicator, double lo, double hi, double rel_width = 1e-3);

/// Seeded mean-field OPO indicator: starting from ⟨a⟩ = i·seed, ⟨b⟩ = 0, the
/// fundamental amplitude grows over the late half of `horizon` only above
/// threshold. A vacuum start never leaves ⟨a⟩ = 0 in mean field, so the
/// seed is required to expose the instability.
bool mfa_opo_oscillates(const ChiTwoParameters& p, double horizon = 200.0, double seed = 1e-4);

/// Mean-field SHG over `horizon`, tested with detect_self_pulsing on ⟨a†a⟩.
/// Starts from ⟨a⟩ = seed (real), ⟨b⟩ = 0: from vacuum the amplitudes stay
/// on the imaginary axis, where the limit cycle cannot develop.
bool mfa_shg_self_pulses(const ChiTwoParameters& p, double horizon = 400.0, double seed = 1e-4);

} // namespace qce
