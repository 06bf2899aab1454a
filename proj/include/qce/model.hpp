#pragma once

#include <string>
#include <vector>

#include "qce/operator_algebra.hpp"

namespace qce {

/// One amplitude-damping channel κ·L_d with L_d[ρ] = 2dρd† − d†dρ − ρd†d.
struct Dissipator {
    double rate = 0.0;
    Monomial jump;
};

/// Coherent drive E(O + O†) plus detuning Δ O†O, both in the rotating frame.
struct DriveSpec {
    ModeIndex target;
    double amplitude = 0.0;
    double detuning = 0.0;

    OperatorPoly hamiltonian() const;
};

/// A driven-dissipative bosonic model in the rotating frame (ħ = 1).
///
/// Construction validates the model: at least one mode, every operator
/// inside the declared modes, a Hermitian Hamiltonian, strictly positive
/// rates and non-identity jumps. Violations throw std::invalid_argument.
class ModelSpec {
public:
    ModelSpec(std::size_t mode_count, OperatorPoly hamiltonian, std::vector<Dissipator> dissipators,
              std::string label);

    std::size_t mode_count() const { return mode_count_; }
    const OperatorPoly& hamiltonian() const { return hamiltonian_; }
    const std::vector<Dissipator>& dissipators() const { return dissipators_; }
    const std::string& label() const { return label_; }

private:
    std::size_t mode_count_;
    OperatorPoly hamiltonian_;
    std::vector<Dissipator> dissipators_;
    std::string label_;
};

/// Parameters of the degenerate χ(2) two-mode models. Mode a (index 0) is the
/// fundamental, mode b (index 1) the second harmonic.
struct ChiTwoParameters {
    double g = 0.0;
    double drive = 0.0;
    double kappa_a = 1.0;
    double kappa_b = 1.0;
    double detuning_a = 0.0;
    double detuning_b = 0.0;
};

/// Populations at or below this are treated as vacuum (g2 is undefined there).
inline constexpr double kVacuumFloor = 1e-10;

inline constexpr ModeIndex kModeA{0};
inline constexpr ModeIndex kModeB{1};

/// The same dissipators with H replaced by −H*. Normal-ordered monomials are
/// real in the Fock basis, so if ρ(t) solves `model` then ρ(t)* solves the
/// result and every moment is conjugated.
ModelSpec conjugate_model(const ModelSpec& model);

/// H = Δ_a a†a + Δ_b b†b + g(a†²b + a²b†), without drive.
OperatorPoly chi_two_hamiltonian(double g, double detuning_a, double detuning_b);

/// Second-harmonic generation: the drive acts on the fundamental mode a.
ModelSpec shg_model(const ChiTwoParameters& p);
/// Optical parametric oscillator: the drive acts on the harmonic mode b.
ModelSpec opo_model(const ChiTwoParameters& p);

} // namespace qce
