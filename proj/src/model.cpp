#include "qce/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace qce {

OperatorPoly DriveSpec::hamiltonian() const {
    OperatorPoly h;
    h.add_term(Monomial::annihilation(target), amplitude);
    h.add_term(Monomial::creation(target), amplitude);
    if (detuning != 0.0) h.add_term(Monomial::number(target), detuning);
    return h;
}

ModelSpec::ModelSpec(std::size_t mode_count, OperatorPoly hamiltonian, std::vector<Dissipator> dissipators,
                     std::string label)
    : mode_count_(mode_count),
      hamiltonian_(std::move(hamiltonian)),
      dissipators_(std::move(dissipators)),
      label_(std::move(label)) {
    if (mode_count_ == 0) throw std::invalid_argument("model needs at least one mode");
    if (hamiltonian_.mode_span() > mode_count_) {
        throw std::invalid_argument("hamiltonian references a mode beyond mode_count");
    }
    double scale = 1.0;
    for (const auto& [m, c] : hamiltonian_.terms()) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw std::invalid_argument("hamiltonian has a non-finite coefficient");
        }
        scale = std::max(scale, std::abs(c));
    }
    if (!adjoint(hamiltonian_).approx_equal(hamiltonian_, 1e-12 * scale)) {
        throw std::invalid_argument("hamiltonian is not Hermitian");
    }
    for (const auto& d : dissipators_) {
        if (!(d.rate > 0.0) || !std::isfinite(d.rate)) {
            throw std::invalid_argument("dissipation rate must be positive and finite");
        }
        if (d.jump.is_identity()) throw std::invalid_argument("jump operator must not be the identity");
        if (d.jump.mode_span() > mode_count_) {
            throw std::invalid_argument("jump operator references a mode beyond mode_count");
        }
    }
}

OperatorPoly chi_two_hamiltonian(double g, double detuning_a, double detuning_b) {
    OperatorPoly h;
    if (detuning_a != 0.0) h.add_term(Monomial::number(kModeA), detuning_a);
    if (detuning_b != 0.0) h.add_term(Monomial::number(kModeB), detuning_b);
    if (g != 0.0) {
        // a†²b and a²b† are already normal ordered (distinct modes commute).
        h += multiply(Monomial::creation(kModeA, 2), Monomial::annihilation(kModeB)) * g;
        h += multiply(Monomial::annihilation(kModeA, 2), Monomial::creation(kModeB)) * g;
    }
    return h;
}

namespace {

void check_chi_two(const ChiTwoParameters& p) {
    if (!(p.kappa_a > 0.0) || !(p.kappa_b > 0.0)) throw std::invalid_argument("kappa_a and kappa_b must be positive");
    if (!(p.g >= 0.0)) throw std::invalid_argument("g must be non-negative");
    if (!(p.drive >= 0.0)) throw std::invalid_argument("drive amplitude E must be non-negative");
}

ModelSpec chi_two_model(const ChiTwoParameters& p, ModeIndex driven, const char* kind) {
    check_chi_two(p);
    OperatorPoly h = chi_two_hamiltonian(p.g, p.detuning_a, p.detuning_b);
    if (p.drive != 0.0) h += DriveSpec{driven, p.drive, 0.0}.hamiltonian();
    std::vector<Dissipator> dissipators{
        {p.kappa_a, Monomial::annihilation(kModeA)},
        {p.kappa_b, Monomial::annihilation(kModeB)},
    };
    return ModelSpec(2, std::move(h), std::move(dissipators), kind);
}

} // namespace

ModelSpec shg_model(const ChiTwoParameters& p) { return chi_two_model(p, kModeA, "shg"); }

ModelSpec opo_model(const ChiTwoParameters& p) { return chi_two_model(p, kModeB, "opo"); }

ModelSpec conjugate_model(const ModelSpec& model) {
    OperatorPoly h;
    for (const auto& [m, c] : model.hamiltonian().terms()) h.add_term(m, -std::conj(c));
    return ModelSpec(model.mode_count(), std::move(h), model.dissipators(), model.label() + "*");
}

} // namespace qce
