#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qce/model.hpp"
#include "qce/operator_algebra.hpp"

namespace qce {

/// A monomial reduced to its conjugate-pair representative: ⟨A⟩ equals the
/// representative's expectation, conjugated when `conjugated` is set.
struct CanonicalMonomial {
    Monomial representative;
    bool conjugated = false;
};

/// min(A, A†) under the flattened-exponent lexicographic order.
CanonicalMonomial canonicalize(const Monomial& m);

/// All cluster representatives of order 1..M over `mode_count` modes, one
/// per conjugate pair, sorted by (order, flattened exponents).
class ClusterBasis {
public:
    struct Location {
        std::size_t position = 0;
        bool conjugated = false;
    };

    ClusterBasis(std::size_t mode_count, unsigned max_order);

    std::size_t size() const { return representatives_.size(); }
    std::size_t mode_count() const { return mode_count_; }
    unsigned max_order() const { return max_order_; }
    const std::vector<Monomial>& representatives() const { return representatives_; }
    const Monomial& operator[](std::size_t i) const { return representatives_[i]; }

    /// Position of A or A† in the basis; nullopt if A is outside it.
    std::optional<Location> find(const Monomial& m) const;
    /// As find(), but throws std::out_of_range when absent.
    Location locate(const Monomial& m) const;

private:
    std::size_t mode_count_;
    unsigned max_order_;
    std::vector<Monomial> representatives_;
    std::map<Monomial, std::size_t> index_;
};

ClusterBasis enumerate_basis(std::size_t mode_count, unsigned max_order);

/// Basis size from the closed form, without building the basis.
std::uint64_t count_clusters(std::size_t mode_count, unsigned max_order);

/// Normal-ordered operator whose expectation is d⟨A⟩/dt:
/// i[H, A] + Σ_j κ_j (2 d_j†A d_j − d_j†d_j A − A d_j†d_j).
OperatorPoly moment_rhs(const Monomial& target, const ModelSpec& model);

/// Polynomial over expectation variables: Σ c · Π_k ⟨X_k⟩. The same type
/// represents polynomials over cumulant variables Δ⟨X_k⟩; which one is meant
/// is a property of the producing function.
class MomentPoly {
public:
    /// A product of variables, kept sorted so equal products compare equal.
    using Product = std::vector<Monomial>;
    using TermMap = std::map<Product, Complex>;

    MomentPoly() = default;

    static MomentPoly constant(Complex c);
    static MomentPoly variable(const Monomial& m);

    const TermMap& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    Complex coefficient(Product product) const;

    void add_term(Product product, Complex coefficient);
    MomentPoly& operator+=(const MomentPoly& other);
    MomentPoly& operator*=(Complex scalar);
    friend MomentPoly operator*(const MomentPoly& lhs, const MomentPoly& rhs);

    /// Replaces each variable by a polynomial (e.g. cumulants by their moment expansions).
    MomentPoly substitute(const std::function<const MomentPoly&(const Monomial&)>& image) const;
    Complex evaluate(const std::function<Complex(const Monomial&)>& value) const;

    unsigned max_variable_order() const;
    std::string to_string(const char* bracket_open = "<", const char* bracket_close = ">") const;

private:
    TermMap terms_;
};

/// Calls `visit(blocks)` once per distinct way of splitting the elementary
/// operators of `m` into `min_blocks` or more nonempty groups, with `blocks`
/// sorted and `multiplicity` the number of position-level set partitions that
/// produce the same grouping.
void for_each_partition(const Monomial& m, std::size_t min_blocks,
                        const std::function<void(const std::vector<Monomial>& blocks, std::size_t multiplicity)>& visit);

/// Memoized cumulant expansions Δ⟨A⟩ as polynomials over moments, using
/// Δ⟨A⟩ = Σ_π (−1)^{|π|−1} (|π|−1)! Π_{B∈π} ⟨B⟩ over set partitions π of A's
/// elementary operators. Not thread-safe.
class CumulantTable {
public:
    const MomentPoly& cumulant(const Monomial& m);
    std::size_t size() const { return table_.size(); }

private:
    std::map<Monomial, MomentPoly> table_;
};

const MomentPoly& cumulant_of(const Monomial& m, CumulantTable& table);

/// ⟨A⟩ = Σ_π Π_{B∈π} Δ⟨B⟩ restricted to partitions whose blocks all have
/// order ≤ max_block_order; a polynomial over cumulant variables.
MomentPoly cumulant_expansion(const Monomial& m, unsigned max_block_order);

/// ⟨A⟩ with every cumulant of order > M set to zero, as a polynomial over
/// moments of order ≤ M. Returns the moment itself when order(A) ≤ M.
MomentPoly close_moment(const Monomial& m, unsigned max_order, CumulantTable& table);

/// One product term of a moment equation: coefficient × Π ⟨basis refs⟩.
struct MomentRef {
    std::uint32_t position = 0;
    bool conjugated = false;

    auto operator<=>(const MomentRef&) const = default;
};

struct RhsTerm {
    Complex coefficient;
    std::vector<MomentRef> factors;
};

/// Closed, autonomous ODE system for the basis expectation values.
class MomentODESystem {
public:
    MomentODESystem(ClusterBasis basis, std::vector<std::vector<RhsTerm>> rhs, std::string label);

    const ClusterBasis& basis() const { return basis_; }
    std::size_t size() const { return basis_.size(); }
    const std::vector<RhsTerm>& rhs(std::size_t i) const { return rhs_[i]; }
    const std::string& label() const { return label_; }
    std::size_t term_count() const { return coefficients_.size(); }

    /// derivative[i] = d⟨basis[i]⟩/dt at `state`.
    void evaluate(std::span<const Complex> state, std::span<Complex> derivative) const;

    /// ⟨A⟩ for any monomial: read from the basis when tracked, otherwise
    /// reconstructed with the same cumulant closure as the equations.
    Complex moment(std::span<const Complex> state, const Monomial& m) const;

    /// One line per cluster: d<...>/dt = terms.
    std::string dump() const;

private:
    ClusterBasis basis_;
    std::vector<std::vector<RhsTerm>> rhs_;
    std::string label_;

    // Flattened form of rhs_ for the evaluation loop. Factor indices address
    // an interleaved buffer (x_0, x_0*, x_1, x_1*, ...).
    std::vector<std::size_t> equation_offsets_;
    std::vector<Complex> coefficients_;
    std::vector<std::size_t> factor_offsets_;
    std::vector<std::uint32_t> factor_slots_;
};

MomentODESystem build_system(const ModelSpec& model, unsigned max_order);

/// Basis column labels such as "<a+ b>".
std::string cluster_label(const Monomial& m);

} // namespace qce
