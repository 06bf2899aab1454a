#include "qce/operator_algebra.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qce {

namespace {

constexpr unsigned kMaxPower = std::numeric_limits<std::uint16_t>::max();

double falling_factorial_ratio(unsigned n, unsigned k) {
    // n! / (n-k)!
    double r = 1.0;
    for (unsigned i = 0; i < k; ++i) r *= static_cast<double>(n - i);
    return r;
}

double binomial(unsigned n, unsigned k) {
    if (k > n) return 0.0;
    return falling_factorial_ratio(n, k) / falling_factorial_ratio(k, k);
}

std::uint16_t checked_power(unsigned p) {
    if (p > kMaxPower) throw std::overflow_error("monomial power exceeds storage range");
    return static_cast<std::uint16_t>(p);
}

} // namespace

std::string mode_name(ModeIndex mode) {
    if (mode.id < 26) return std::string(1, static_cast<char>('a' + mode.id));
    return "m" + std::to_string(mode.id);
}

// --- Monomial ---------------------------------------------------------------

Monomial Monomial::creation(ModeIndex mode, unsigned power) {
    Monomial m;
    if (power == 0) return m;
    m.powers_.assign(2 * (mode.id + 1), 0);
    m.powers_[2 * mode.id] = checked_power(power);
    return m;
}

Monomial Monomial::annihilation(ModeIndex mode, unsigned power) {
    Monomial m;
    if (power == 0) return m;
    m.powers_.assign(2 * (mode.id + 1), 0);
    m.powers_[2 * mode.id + 1] = checked_power(power);
    return m;
}

Monomial Monomial::number(ModeIndex mode) {
    Monomial m;
    m.powers_.assign(2 * (mode.id + 1), 0);
    m.powers_[2 * mode.id] = 1;
    m.powers_[2 * mode.id + 1] = 1;
    return m;
}

Monomial Monomial::from_powers(std::span<const unsigned> flattened) {
    if (flattened.size() % 2 != 0) throw std::invalid_argument("flattened exponent vector must have even length");
    Monomial m;
    m.powers_.reserve(flattened.size());
    for (unsigned p : flattened) m.powers_.push_back(checked_power(p));
    m.trim();
    return m;
}

void Monomial::trim() {
    while (!powers_.empty() && powers_[powers_.size() - 1] == 0 && powers_[powers_.size() - 2] == 0) {
        powers_.resize(powers_.size() - 2);
    }
}

unsigned Monomial::creation_power(ModeIndex mode) const {
    const std::size_t k = 2 * static_cast<std::size_t>(mode.id);
    return k < powers_.size() ? powers_[k] : 0;
}

unsigned Monomial::annihilation_power(ModeIndex mode) const {
    const std::size_t k = 2 * static_cast<std::size_t>(mode.id) + 1;
    return k < powers_.size() ? powers_[k] : 0;
}

unsigned Monomial::order() const {
    unsigned total = 0;
    for (auto p : powers_) total += p;
    return total;
}

bool Monomial::is_self_adjoint() const {
    for (std::size_t k = 0; k < powers_.size(); k += 2) {
        if (powers_[k] != powers_[k + 1]) return false;
    }
    return true;
}

Monomial Monomial::adjoint() const {
    Monomial m = *this;
    for (std::size_t k = 0; k < m.powers_.size(); k += 2) std::swap(m.powers_[k], m.powers_[k + 1]);
    return m;
}

std::vector<LadderOp> Monomial::ladder_ops() const {
    std::vector<LadderOp> ops;
    ops.reserve(order());
    for (std::size_t j = 0; j < mode_span(); ++j) {
        const ModeIndex mode(static_cast<std::uint32_t>(j));
        for (unsigned i = 0; i < powers_[2 * j]; ++i) ops.push_back({mode, true});
        for (unsigned i = 0; i < powers_[2 * j + 1]; ++i) ops.push_back({mode, false});
    }
    return ops;
}

std::string Monomial::to_string() const {
    if (is_identity()) return "1";
    std::string out;
    auto append = [&out](const std::string& token, unsigned power) {
        if (power == 0) return;
        if (!out.empty()) out += ' ';
        out += token;
        if (power > 1) out += '^' + std::to_string(power);
    };
    for (std::size_t j = 0; j < mode_span(); ++j) {
        const auto name = mode_name(ModeIndex(static_cast<std::uint32_t>(j)));
        append(name + "+", powers_[2 * j]);
        append(name, powers_[2 * j + 1]);
    }
    return out;
}

// --- OperatorPoly -----------------------------------------------------------

OperatorPoly::OperatorPoly(const Monomial& m, Complex coefficient) { add_term(m, coefficient); }

Complex OperatorPoly::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Complex{} : it->second;
}

unsigned OperatorPoly::max_order() const {
    unsigned best = 0;
    for (const auto& [m, c] : terms_) best = std::max(best, m.order());
    return best;
}

std::size_t OperatorPoly::mode_span() const {
    std::size_t best = 0;
    for (const auto& [m, c] : terms_) best = std::max(best, m.mode_span());
    return best;
}

void OperatorPoly::add_term(const Monomial& m, Complex coefficient) {
    auto [it, inserted] = terms_.try_emplace(m, coefficient);
    if (!inserted) it->second += coefficient;
    if (std::abs(it->second) < kPruneThreshold) terms_.erase(it);
}

OperatorPoly& OperatorPoly::operator+=(const OperatorPoly& other) {
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
}

OperatorPoly& OperatorPoly::operator-=(const OperatorPoly& other) {
    for (const auto& [m, c] : other.terms_) add_term(m, -c);
    return *this;
}

OperatorPoly& OperatorPoly::operator*=(Complex scalar) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        it->second *= scalar;
        if (std::abs(it->second) < kPruneThreshold) {
            it = terms_.erase(it);
        } else {
            ++it;
        }
    }
    return *this;
}

bool OperatorPoly::approx_equal(const OperatorPoly& other, double tol) const {
    OperatorPoly diff = *this;
    diff -= other;
    return std::all_of(diff.terms_.begin(), diff.terms_.end(),
                       [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

std::string OperatorPoly::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(12);
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << '(' << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
        if (!m.is_identity()) os << ' ' << m.to_string();
    }
    return os.str();
}

OperatorPoly operator*(const OperatorPoly& lhs, const OperatorPoly& rhs) { return multiply(lhs, rhs); }

// --- algebra ----------------------------------------------------------------

OperatorPoly multiply(const Monomial& lhs, const Monomial& rhs) {
    // Per mode: (a†^p1 a^q1)(a†^p2 a^q2) = Σ_k C(q1,k) C(p2,k) k! a†^{p1+p2-k} a^{q1+q2-k}.
    // Distinct modes commute, so the full product is the outer product of the
    // per-mode expansions.
    struct Partial {
        double weight;
        std::vector<unsigned> powers;
    };
    const std::size_t span = std::max(lhs.mode_span(), rhs.mode_span());
    std::vector<Partial> partials{{1.0, {}}};
    for (std::size_t j = 0; j < span; ++j) {
        const ModeIndex mode(static_cast<std::uint32_t>(j));
        const unsigned p1 = lhs.creation_power(mode), q1 = lhs.annihilation_power(mode);
        const unsigned p2 = rhs.creation_power(mode), q2 = rhs.annihilation_power(mode);
        const unsigned kmax = std::min(q1, p2);
        std::vector<Partial> next;
        next.reserve(partials.size() * (kmax + 1));
        for (const auto& part : partials) {
            for (unsigned k = 0; k <= kmax; ++k) {
                const double w = binomial(q1, k) * binomial(p2, k) * falling_factorial_ratio(k, k);
                Partial extended{part.weight * w, part.powers};
                extended.powers.push_back(p1 + p2 - k);
                extended.powers.push_back(q1 + q2 - k);
                next.push_back(std::move(extended));
            }
        }
        partials = std::move(next);
    }
    OperatorPoly out;
    for (const auto& part : partials) out.add_term(Monomial::from_powers(part.powers), part.weight);
    return out;
}

OperatorPoly multiply(const OperatorPoly& lhs, const OperatorPoly& rhs) {
    OperatorPoly out;
    for (const auto& [ml, cl] : lhs.terms()) {
        for (const auto& [mr, cr] : rhs.terms()) {
            const Complex c = cl * cr;
            const OperatorPoly product = multiply(ml, mr);
            for (const auto& [m, w] : product.terms()) out.add_term(m, c * w);
        }
    }
    return out;
}

OperatorPoly normal_order(std::span<const LadderOp> word) {
    OperatorPoly out = OperatorPoly::identity();
    for (const auto& op : word) {
        const Monomial factor = op.creation ? Monomial::creation(op.mode) : Monomial::annihilation(op.mode);
        out = multiply(out, OperatorPoly(factor));
    }
    return out;
}

OperatorPoly commutator(const OperatorPoly& lhs, const OperatorPoly& rhs) {
    return multiply(lhs, rhs) - multiply(rhs, lhs);
}

OperatorPoly adjoint(const OperatorPoly& p) {
    OperatorPoly out;
    for (const auto& [m, c] : p.terms()) out.add_term(m.adjoint(), std::conj(c));
    return out;
}

OperatorPoly lindblad_adjoint(const Monomial& jump, const OperatorPoly& target) {
    const OperatorPoly d(jump);
    const OperatorPoly d_dag(jump.adjoint());
    const OperatorPoly number = multiply(d_dag, d);
    OperatorPoly out = 2.0 * multiply(multiply(d_dag, target), d);
    out -= multiply(number, target);
    out -= multiply(target, number);
    return out;
}

OperatorPoly lindblad_adjoint(const Monomial& jump, const Monomial& target) {
    return lindblad_adjoint(jump, OperatorPoly(target));
}

// --- parsing ----------------------------------------------------------------

ModeIndex parse_mode(const std::string& name) {
    if (name.size() == 1 && name[0] >= 'a' && name[0] <= 'z') {
        return ModeIndex(static_cast<std::uint32_t>(name[0] - 'a'));
    }
    if (name.size() > 1 && name[0] == 'm' &&
        std::all_of(name.begin() + 1, name.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
        return ModeIndex(static_cast<std::uint32_t>(std::stoul(name.substr(1))));
    }
    throw std::invalid_argument("unknown mode name '" + name + "'");
}

OperatorPoly parse_word(const std::string& text) {
    std::vector<LadderOp> word;
    std::string normalized = text;
    std::replace(normalized.begin(), normalized.end(), '*', ' ');
    std::istringstream in(normalized);
    std::string token;
    while (in >> token) {
        unsigned repeat = 1;
        if (auto caret = token.find('^'); caret != std::string::npos) {
            const std::string count = token.substr(caret + 1);
            if (count.empty() || !std::all_of(count.begin(), count.end(),
                                              [](unsigned char ch) { return std::isdigit(ch); })) {
                throw std::invalid_argument("bad power in operator token '" + token + "'");
            }
            repeat = static_cast<unsigned>(std::stoul(count));
            token.resize(caret);
        }
        bool creation = false;
        if (!token.empty() && token.back() == '+') {
            creation = true;
            token.pop_back();
        }
        if (token == "1" && !creation) continue;
        const ModeIndex mode = parse_mode(token);
        for (unsigned i = 0; i < repeat; ++i) word.push_back({mode, creation});
    }
    return normal_order(word);
}

} // namespace qce

std::size_t std::hash<qce::Monomial>::operator()(const qce::Monomial& m) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto p : m.flattened()) {
        h ^= p;
        h *= 0x100000001b3ULL;
    }
    return h;
}
