#include "qce/cluster_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace qce {

namespace {

constexpr double kTermPrune = 1e-14;

void enumerate_powers(std::vector<unsigned>& powers, std::size_t slot, unsigned remaining,
                      const std::function<void(const std::vector<unsigned>&)>& emit) {
    if (slot == powers.size()) {
        emit(powers);
        return;
    }
    for (unsigned p = 0; p <= remaining; ++p) {
        powers[slot] = p;
        enumerate_powers(powers, slot + 1, remaining - p, emit);
    }
    powers[slot] = 0;
}

std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(std::size_t n) {
    double r = 1.0;
    for (std::size_t i = 2; i <= n; ++i) r *= static_cast<double>(i);
    return r;
}

std::string format_coefficient(Complex c) {
    std::ostringstream os;
    os.precision(10);
    if (c.imag() == 0.0) {
        os << c.real();
    } else if (c.real() == 0.0) {
        os << c.imag() << "i";
    } else {
        os << '(' << c.real() << (c.imag() < 0 ? " - " : " + ") << std::abs(c.imag()) << "i)";
    }
    return os.str();
}

} // namespace

// --- canonicalization and basis ---------------------------------------------

CanonicalMonomial canonicalize(const Monomial& m) {
    Monomial adj = m.adjoint();
    if (adj < m) return {std::move(adj), true};
    return {m, false};
}

ClusterBasis::ClusterBasis(std::size_t mode_count, unsigned max_order)
    : mode_count_(mode_count), max_order_(max_order) {
    if (mode_count == 0) throw std::invalid_argument("cluster basis needs at least one mode");
    if (max_order == 0) throw std::invalid_argument("cluster basis needs order M >= 1");
    std::vector<unsigned> powers(2 * mode_count, 0);
    enumerate_powers(powers, 0, max_order, [this](const std::vector<unsigned>& p) {
        const Monomial m = Monomial::from_powers(p);
        if (m.is_identity()) return;
        if (canonicalize(m).conjugated) return;
        representatives_.push_back(m);
    });
    std::sort(representatives_.begin(), representatives_.end(), [](const Monomial& x, const Monomial& y) {
        const unsigned ox = x.order(), oy = y.order();
        return ox != oy ? ox < oy : x < y;
    });
    for (std::size_t i = 0; i < representatives_.size(); ++i) index_.emplace(representatives_[i], i);
}

std::optional<ClusterBasis::Location> ClusterBasis::find(const Monomial& m) const {
    const auto canonical = canonicalize(m);
    auto it = index_.find(canonical.representative);
    if (it == index_.end()) return std::nullopt;
    return Location{it->second, canonical.conjugated};
}

ClusterBasis::Location ClusterBasis::locate(const Monomial& m) const {
    if (auto loc = find(m)) return *loc;
    throw std::out_of_range("monomial " + m.to_string() + " is not in the cluster basis");
}

ClusterBasis enumerate_basis(std::size_t mode_count, unsigned max_order) { return {mode_count, max_order}; }

std::uint64_t count_clusters(std::size_t mode_count, unsigned max_order) {
    if (mode_count == 0 || max_order == 0) throw std::invalid_argument("count_clusters needs inputs >= 1");
    // Monomials of order n in 2m ladder variables: C(n + 2m − 1, 2m − 1).
    // Self-adjoint ones (p_j = q_j) exist for even n: C(n/2 + m − 1, m − 1).
    // Each non-self-adjoint pair contributes one representative.
    const std::uint64_t m = mode_count;
    std::uint64_t all = 0, self_adjoint = 0;
    for (std::uint64_t n = 1; n <= max_order; ++n) {
        all += binomial_u64(n + 2 * m - 1, 2 * m - 1);
        if (n % 2 == 0) self_adjoint += binomial_u64(n / 2 + m - 1, m - 1);
    }
    return (all + self_adjoint) / 2;
}

// --- equations of motion ----------------------------------------------------

OperatorPoly moment_rhs(const Monomial& target, const ModelSpec& model) {
    const OperatorPoly a(target);
    OperatorPoly out = commutator(model.hamiltonian(), a) * Complex(0.0, 1.0);
    for (const auto& d : model.dissipators()) out += lindblad_adjoint(d.jump, a) * d.rate;
    return out;
}

// --- moment polynomials -----------------------------------------------------

MomentPoly MomentPoly::constant(Complex c) {
    MomentPoly p;
    p.add_term({}, c);
    return p;
}

MomentPoly MomentPoly::variable(const Monomial& m) {
    MomentPoly p;
    p.add_term({m}, 1.0);
    return p;
}

Complex MomentPoly::coefficient(Product product) const {
    std::sort(product.begin(), product.end());
    auto it = terms_.find(product);
    return it == terms_.end() ? Complex{} : it->second;
}

void MomentPoly::add_term(Product product, Complex coefficient) {
    std::sort(product.begin(), product.end());
    auto [it, inserted] = terms_.try_emplace(std::move(product), coefficient);
    if (!inserted) it->second += coefficient;
    if (std::abs(it->second) < kTermPrune) terms_.erase(it);
}

MomentPoly& MomentPoly::operator+=(const MomentPoly& other) {
    for (const auto& [prod, c] : other.terms_) add_term(prod, c);
    return *this;
}

MomentPoly& MomentPoly::operator*=(Complex scalar) {
    MomentPoly scaled;
    for (const auto& [prod, c] : terms_) scaled.add_term(prod, c * scalar);
    *this = std::move(scaled);
    return *this;
}

MomentPoly operator*(const MomentPoly& lhs, const MomentPoly& rhs) {
    MomentPoly out;
    for (const auto& [pl, cl] : lhs.terms_) {
        for (const auto& [pr, cr] : rhs.terms_) {
            MomentPoly::Product prod;
            prod.reserve(pl.size() + pr.size());
            std::merge(pl.begin(), pl.end(), pr.begin(), pr.end(), std::back_inserter(prod));
            out.add_term(std::move(prod), cl * cr);
        }
    }
    return out;
}

MomentPoly MomentPoly::substitute(const std::function<const MomentPoly&(const Monomial&)>& image) const {
    MomentPoly out;
    for (const auto& [prod, c] : terms_) {
        MomentPoly term = constant(c);
        for (const auto& var : prod) term = term * image(var);
        out += term;
    }
    return out;
}

Complex MomentPoly::evaluate(const std::function<Complex(const Monomial&)>& value) const {
    Complex total{};
    for (const auto& [prod, c] : terms_) {
        Complex t = c;
        for (const auto& var : prod) t *= value(var);
        total += t;
    }
    return total;
}

unsigned MomentPoly::max_variable_order() const {
    unsigned best = 0;
    for (const auto& [prod, c] : terms_) {
        for (const auto& var : prod) best = std::max(best, var.order());
    }
    return best;
}

std::string MomentPoly::to_string(const char* open, const char* close) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [prod, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << format_coefficient(c);
        for (const auto& var : prod) os << ' ' << open << var.to_string() << close;
    }
    return os.str();
}

// --- partitions and cumulants -----------------------------------------------

void for_each_partition(const Monomial& m, std::size_t min_blocks,
                        const std::function<void(const std::vector<Monomial>&, std::size_t)>& visit) {
    const auto ops = m.ladder_ops();
    const std::size_t n = ops.size();
    if (n == 0) return;
    const std::size_t span = m.mode_span();

    // Restricted growth strings: label[0] = 0, label[i] <= 1 + max(label[0..i)).
    std::vector<std::size_t> label(n, 0), prefix_max(n, 0);
    std::map<std::vector<Monomial>, std::size_t> groupings;
    std::vector<std::vector<unsigned>> block_powers;
    while (true) {
        const std::size_t blocks = prefix_max[n - 1] + 1;
        if (blocks >= min_blocks) {
            block_powers.assign(blocks, std::vector<unsigned>(2 * span, 0));
            for (std::size_t i = 0; i < n; ++i) {
                block_powers[label[i]][2 * ops[i].mode.id + (ops[i].creation ? 0 : 1)] += 1;
            }
            std::vector<Monomial> grouping;
            grouping.reserve(blocks);
            for (const auto& p : block_powers) grouping.push_back(Monomial::from_powers(p));
            std::sort(grouping.begin(), grouping.end());
            ++groupings[std::move(grouping)];
        }
        // Advance to the next restricted growth string.
        std::size_t i = n - 1;
        while (i > 0 && label[i] == prefix_max[i - 1] + 1) --i;
        if (i == 0) break;
        ++label[i];
        prefix_max[i] = std::max(prefix_max[i - 1], label[i]);
        for (std::size_t k = i + 1; k < n; ++k) {
            label[k] = 0;
            prefix_max[k] = prefix_max[i];
        }
    }
    for (const auto& [grouping, multiplicity] : groupings) visit(grouping, multiplicity);
}

const MomentPoly& CumulantTable::cumulant(const Monomial& m) {
    if (auto it = table_.find(m); it != table_.end()) return it->second;
    if (m.is_identity()) throw std::invalid_argument("cumulant of the identity is undefined");
    MomentPoly poly;
    for_each_partition(m, 1, [&poly](const std::vector<Monomial>& blocks, std::size_t multiplicity) {
        const std::size_t k = blocks.size();
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        poly.add_term(blocks, sign * factorial(k - 1) * static_cast<double>(multiplicity));
    });
    return table_.emplace(m, std::move(poly)).first->second;
}

const MomentPoly& cumulant_of(const Monomial& m, CumulantTable& table) { return table.cumulant(m); }

MomentPoly cumulant_expansion(const Monomial& m, unsigned max_block_order) {
    MomentPoly poly;
    for_each_partition(m, 1, [&](const std::vector<Monomial>& blocks, std::size_t multiplicity) {
        for (const auto& b : blocks) {
            if (b.order() > max_block_order) return;
        }
        poly.add_term(blocks, static_cast<double>(multiplicity));
    });
    return poly;
}

MomentPoly close_moment(const Monomial& m, unsigned max_order, CumulantTable& table) {
    if (m.order() <= max_order) return MomentPoly::variable(m);
    return cumulant_expansion(m, max_order).substitute([&table](const Monomial& block) -> const MomentPoly& {
        return table.cumulant(block);
    });
}

// --- ODE system ---------------------------------------------------------------

std::string cluster_label(const Monomial& m) { return "<" + m.to_string() + ">"; }

MomentODESystem::MomentODESystem(ClusterBasis basis, std::vector<std::vector<RhsTerm>> rhs, std::string label)
    : basis_(std::move(basis)), rhs_(std::move(rhs)), label_(std::move(label)) {
    if (rhs_.size() != basis_.size()) throw std::invalid_argument("one right-hand side per basis cluster required");
    equation_offsets_.push_back(0);
    factor_offsets_.push_back(0);
    for (const auto& eq : rhs_) {
        for (const auto& term : eq) {
            coefficients_.push_back(term.coefficient);
            for (const auto& f : term.factors) {
                if (f.position >= basis_.size()) throw std::out_of_range("moment reference outside the basis");
                factor_slots_.push_back(2 * f.position + (f.conjugated ? 1 : 0));
            }
            factor_offsets_.push_back(factor_slots_.size());
        }
        equation_offsets_.push_back(coefficients_.size());
    }
}

void MomentODESystem::evaluate(std::span<const Complex> state, std::span<Complex> derivative) const {
    const std::size_t n = basis_.size();
    thread_local std::vector<Complex> slots;
    slots.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        slots[2 * i] = state[i];
        slots[2 * i + 1] = std::conj(state[i]);
    }
    for (std::size_t eq = 0; eq < n; ++eq) {
        Complex sum{};
        for (std::size_t t = equation_offsets_[eq]; t < equation_offsets_[eq + 1]; ++t) {
            Complex prod = coefficients_[t];
            for (std::size_t f = factor_offsets_[t]; f < factor_offsets_[t + 1]; ++f) prod *= slots[factor_slots_[f]];
            sum += prod;
        }
        derivative[eq] = sum;
    }
}

Complex MomentODESystem::moment(std::span<const Complex> state, const Monomial& m) const {
    if (m.is_identity()) return 1.0;
    auto lookup = [&](const Monomial& x) -> Complex {
        const auto loc = basis_.locate(x);
        return loc.conjugated ? std::conj(state[loc.position]) : state[loc.position];
    };
    if (m.order() <= basis_.max_order()) return lookup(m);
    CumulantTable table;
    return close_moment(m, basis_.max_order(), table).evaluate(lookup);
}

std::string MomentODESystem::dump() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        os << "d" << cluster_label(basis_[i]) << "/dt =";
        if (rhs_[i].empty()) os << " 0";
        bool first = true;
        for (const auto& term : rhs_[i]) {
            os << (first ? " " : " + ") << format_coefficient(term.coefficient);
            first = false;
            for (const auto& f : term.factors) {
                const Monomial& rep = basis_[f.position];
                os << ' ' << cluster_label(f.conjugated ? rep.adjoint() : rep);
            }
        }
        os << '\n';
    }
    return os.str();
}

MomentODESystem build_system(const ModelSpec& model, unsigned max_order) {
    ClusterBasis basis(model.mode_count(), max_order);
    CumulantTable table;
    std::map<Monomial, MomentPoly> closures;
    auto closure_of = [&](const Monomial& m) -> const MomentPoly& {
        auto it = closures.find(m);
        if (it == closures.end()) it = closures.emplace(m, close_moment(m, max_order, table)).first;
        return it->second;
    };

    std::vector<std::vector<RhsTerm>> rhs;
    rhs.reserve(basis.size());
    for (const auto& rep : basis.representatives()) {
        std::map<std::vector<MomentRef>, Complex> collected;
        auto accumulate = [&collected](std::vector<MomentRef> factors, Complex c) {
            std::sort(factors.begin(), factors.end());
            collected[std::move(factors)] += c;
        };
        const OperatorPoly derivative = moment_rhs(rep, model);
        for (const auto& [mono, c] : derivative.terms()) {
            if (mono.is_identity()) {
                accumulate({}, c);
                continue;
            }
            for (const auto& [product, weight] : closure_of(mono).terms()) {
                std::vector<MomentRef> factors;
                factors.reserve(product.size());
                for (const auto& var : product) {
                    const auto loc = basis.locate(var);
                    factors.push_back({static_cast<std::uint32_t>(loc.position), loc.conjugated});
                }
                accumulate(std::move(factors), c * weight);
            }
        }
        std::vector<RhsTerm> terms;
        for (auto& [factors, c] : collected) {
            if (std::abs(c) < kTermPrune) continue;
            terms.push_back({c, factors});
        }
        rhs.push_back(std::move(terms));
    }
    return {std::move(basis), std::move(rhs), model.label() + "/qce" + std::to_string(max_order)};
}

} // namespace qce
