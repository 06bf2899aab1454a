#pragma once

#include <complex>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qce {

using Complex = std::complex<double>;

/// Identifies one bosonic mode of a model. Modes are displayed as a, b, c, ...
struct ModeIndex {
    std::uint32_t id = 0;

    constexpr ModeIndex() = default;
    constexpr explicit ModeIndex(std::uint32_t i) : id(i) {}

    auto operator<=>(const ModeIndex&) const = default;
};

/// Display name of a mode: a, b, ..., z, then m26, m27, ...
std::string mode_name(ModeIndex mode);

/// A single creation (a†) or annihilation (a) operator.
struct LadderOp {
    ModeIndex mode;
    bool creation = false;
};

/// Normal-ordered product Π_j a_j†^{p_j} a_j^{q_j}.
///
/// Stored as the flattened exponent vector (p_0, q_0, p_1, q_1, ...) with
/// trailing all-zero mode pairs trimmed, so equality and ordering do not
/// depend on how many modes the enclosing model has. The default ordering is
/// lexicographic on the flattened vector, which is also the order used to
/// pick conjugate-pair representatives.
class Monomial {
public:
    /// The identity operator.
    Monomial() = default;

    static Monomial creation(ModeIndex mode, unsigned power = 1);
    static Monomial annihilation(ModeIndex mode, unsigned power = 1);
    /// a†a on one mode.
    static Monomial number(ModeIndex mode);
    /// Builds from a flattened (p_0, q_0, p_1, q_1, ...) vector; odd lengths are rejected.
    static Monomial from_powers(std::span<const unsigned> flattened);

    unsigned creation_power(ModeIndex mode) const;
    unsigned annihilation_power(ModeIndex mode) const;

    /// One past the highest mode that carries a nonzero power.
    std::size_t mode_span() const { return powers_.size() / 2; }
    unsigned order() const;
    bool is_identity() const { return powers_.empty(); }
    bool is_self_adjoint() const;

    /// Swaps creation and annihilation powers in every mode.
    Monomial adjoint() const;

    std::span<const std::uint16_t> flattened() const { return powers_; }

    /// Elementary operators in normal order: per mode, creations then annihilations.
    std::vector<LadderOp> ladder_ops() const;

    /// e.g. "a+^2 b", "1" for the identity.
    std::string to_string() const;

    auto operator<=>(const Monomial&) const = default;
    bool operator==(const Monomial&) const = default;

private:
    void trim();

    std::vector<std::uint16_t> powers_;
};

/// Complex-weighted sum of normal-ordered monomials.
class OperatorPoly {
public:
    static constexpr double kPruneThreshold = 1e-14;

    using TermMap = std::map<Monomial, Complex>;

    OperatorPoly() = default;
    OperatorPoly(const Monomial& m, Complex coefficient = 1.0); // NOLINT(google-explicit-constructor)

    static OperatorPoly identity(Complex coefficient = 1.0) { return OperatorPoly(Monomial{}, coefficient); }

    const TermMap& terms() const { return terms_; }
    Complex coefficient(const Monomial& m) const;
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    unsigned max_order() const;
    std::size_t mode_span() const;

    void add_term(const Monomial& m, Complex coefficient);

    OperatorPoly& operator+=(const OperatorPoly& other);
    OperatorPoly& operator-=(const OperatorPoly& other);
    OperatorPoly& operator*=(Complex scalar);

    /// Max absolute coefficient difference is at most `tol`.
    bool approx_equal(const OperatorPoly& other, double tol = 1e-12) const;

    std::string to_string() const;

    friend OperatorPoly operator+(OperatorPoly lhs, const OperatorPoly& rhs) { return lhs += rhs; }
    friend OperatorPoly operator-(OperatorPoly lhs, const OperatorPoly& rhs) { return lhs -= rhs; }
    friend OperatorPoly operator*(Complex scalar, OperatorPoly p) { return p *= scalar; }
    friend OperatorPoly operator*(OperatorPoly p, Complex scalar) { return p *= scalar; }
    friend OperatorPoly operator*(const OperatorPoly& lhs, const OperatorPoly& rhs);
    friend OperatorPoly operator-(OperatorPoly p) { return p *= -1.0; }

private:
    TermMap terms_;
};

/// Normal-ordered expansion of an operator word using [a_j, a_k†] = δ_jk.
OperatorPoly normal_order(std::span<const LadderOp> word);

OperatorPoly multiply(const Monomial& lhs, const Monomial& rhs);
OperatorPoly multiply(const OperatorPoly& lhs, const OperatorPoly& rhs);
OperatorPoly commutator(const OperatorPoly& lhs, const OperatorPoly& rhs);
OperatorPoly adjoint(const OperatorPoly& p);

/// Heisenberg-picture Lindblad image 2 d†Ad − d†dA − Ad†d.
OperatorPoly lindblad_adjoint(const Monomial& jump, const Monomial& target);
OperatorPoly lindblad_adjoint(const Monomial& jump, const OperatorPoly& target);

/// Parses words such as "a+^2 b", "a a+ a", "m3+ m0". Tokens are separated by
/// whitespace or '*'; a trailing '+' marks a creation operator; '^k' repeats.
/// The word is normal ordered. Throws std::invalid_argument on bad syntax.
OperatorPoly parse_word(const std::string& text);

/// Parses a single mode name ("a", "b", ..., or "m<k>").
ModeIndex parse_mode(const std::string& name);

} // namespace qce

template <>
struct std::hash<qce::Monomial> {
    std::size_t operator()(const qce::Monomial& m) const noexcept;
};
