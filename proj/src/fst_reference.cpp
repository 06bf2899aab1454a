#include "qce/fst_reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qce {

// --- dims ---------------------------------------------------------------------

FockDims::FockDims(std::vector<int> sizes, std::size_t memory_budget) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("FockDims needs at least one mode");
    for (int n : sizes_) {
        if (n < 2) throw std::invalid_argument("Fock truncation dimension must be >= 2");
    }
    strides_.assign(sizes_.size(), 1);
    for (std::size_t j = sizes_.size(); j-- > 0;) {
        strides_[j] = total_;
        total_ *= static_cast<std::size_t>(sizes_[j]);
    }
    const double bytes = static_cast<double>(total_) * static_cast<double>(total_) * sizeof(Complex) *
                         static_cast<double>(kWorkingCopies);
    if (bytes > static_cast<double>(memory_budget)) {
        throw std::length_error("Fock space " + to_string() + " exceeds the memory budget");
    }
}

int FockDims::occupation(std::size_t index, ModeIndex mode) const {
    return static_cast<int>((index / strides_.at(mode.id)) % static_cast<std::size_t>(sizes_[mode.id]));
}

std::string FockDims::to_string() const {
    std::string s;
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
        if (j) s += 'x';
        s += std::to_string(sizes_[j]);
    }
    return s;
}

FockDims default_dims(double drive) {
    const double base = std::max(drive * drive, 4.0);
    const int na = static_cast<int>(std::ceil(base - 1e-9));
    const int nb = std::max(2, static_cast<int>(std::ceil(0.5 * base - 1e-9)));
    return FockDims({na, nb});
}

// --- states -------------------------------------------------------------------

namespace {

/// Product state from per-mode amplitude or population vectors.
Eigen::VectorXcd product_vector(const FockDims& dims, const std::vector<Eigen::VectorXcd>& factors) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(dims.total()));
    for (std::size_t i = 0; i < dims.total(); ++i) {
        Complex amp = 1.0;
        for (std::size_t j = 0; j < dims.mode_count(); ++j) {
            amp *= factors[j](dims.occupation(i, ModeIndex(static_cast<std::uint32_t>(j))));
        }
        v(static_cast<Eigen::Index>(i)) = amp;
    }
    return v;
}

void check_mode_count(const FockDims& dims, std::size_t n) {
    if (n != dims.mode_count()) throw std::invalid_argument("per-mode list does not match the Fock dims");
}

} // namespace

DensityMatrix vacuum_density(const FockDims& dims) {
    return fock_density(dims, std::vector<int>(dims.mode_count(), 0));
}

DensityMatrix fock_density(const FockDims& dims, const std::vector<int>& occupations) {
    check_mode_count(dims, occupations.size());
    std::size_t index = 0;
    for (std::size_t j = 0; j < occupations.size(); ++j) {
        const ModeIndex mode(static_cast<std::uint32_t>(j));
        if (occupations[j] < 0 || occupations[j] >= dims.size(mode)) {
            throw std::out_of_range("Fock occupation outside the truncation");
        }
        index += static_cast<std::size_t>(occupations[j]) * dims.stride(mode);
    }
    const auto n = static_cast<Eigen::Index>(dims.total());
    DensityMatrix rho{dims, Eigen::MatrixXcd::Zero(n, n)};
    rho.entries(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
    return rho;
}

DensityMatrix thermal_density(const FockDims& dims, const std::vector<double>& nbar) {
    check_mode_count(dims, nbar.size());
    std::vector<Eigen::VectorXcd> pops;
    for (std::size_t j = 0; j < nbar.size(); ++j) {
        if (nbar[j] < 0) throw std::invalid_argument("thermal occupation must be non-negative");
        const int d = dims.size(ModeIndex(static_cast<std::uint32_t>(j)));
        Eigen::VectorXcd p(d);
        const double ratio = nbar[j] / (1.0 + nbar[j]);
        for (int n = 0; n < d; ++n) p(n) = std::pow(ratio, n) / (1.0 + nbar[j]);
        p /= p.sum();
        pops.push_back(std::move(p));
    }
    const Eigen::VectorXcd diag = product_vector(dims, pops);
    return {dims, diag.asDiagonal()};
}

DensityMatrix coherent_density(const FockDims& dims, const std::vector<Complex>& alphas) {
    check_mode_count(dims, alphas.size());
    std::vector<Eigen::VectorXcd> amps;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        const int d = dims.size(ModeIndex(static_cast<std::uint32_t>(j)));
        Eigen::VectorXcd c(d);
        c(0) = 1.0;
        for (int n = 1; n < d; ++n) c(n) = c(n - 1) * alphas[j] / std::sqrt(static_cast<double>(n));
        c.normalize();
        amps.push_back(std::move(c));
    }
    const Eigen::VectorXcd psi = product_vector(dims, amps);
    return {dims, psi * psi.adjoint()};
}

// --- operators ----------------------------------------------------------------

SparseOperator monomial_operator(const FockDims& dims, const Monomial& m) {
    if (m.mode_span() > dims.mode_count()) throw std::invalid_argument("monomial references a mode beyond the Fock dims");
    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(dims.total());
    for (std::size_t col = 0; col < dims.total(); ++col) {
        double amp = 1.0;
        std::size_t row = col;
        bool alive = true;
        for (std::size_t j = 0; j < m.mode_span() && alive; ++j) {
            const ModeIndex mode(static_cast<std::uint32_t>(j));
            const int n = dims.occupation(col, mode);
            const int p = static_cast<int>(m.creation_power(mode));
            const int q = static_cast<int>(m.annihilation_power(mode));
            if (n < q || n - q + p >= dims.size(mode)) {
                alive = false;
                break;
            }
            // a^q |n⟩ = √(n!/(n−q)!) |n−q⟩, then a†^p |k⟩ = √((k+p)!/k!) |k+p⟩.
            for (int k = n - q + 1; k <= n; ++k) amp *= std::sqrt(static_cast<double>(k));
            for (int k = n - q + 1; k <= n - q + p; ++k) amp *= std::sqrt(static_cast<double>(k));
            row = row - static_cast<std::size_t>(n) * dims.stride(mode) +
                  static_cast<std::size_t>(n - q + p) * dims.stride(mode);
        }
        if (alive) triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), amp);
    }
    const auto n = static_cast<Eigen::Index>(dims.total());
    SparseOperator op(n, n);
    op.setFromTriplets(triplets.begin(), triplets.end());
    return op;
}

SparseOperator mode_operator(const FockDims& dims, ModeIndex mode) {
    if (mode.id >= dims.mode_count()) throw std::out_of_range("mode index outside the Fock dims");
    return monomial_operator(dims, Monomial::annihilation(mode));
}

SparseOperator operator_matrix(const FockDims& dims, const OperatorPoly& p) {
    const auto n = static_cast<Eigen::Index>(dims.total());
    SparseOperator out(n, n);
    for (const auto& [m, c] : p.terms()) {
        SparseOperator term = monomial_operator(dims, m) * c;
        out += term;
    }
    return out;
}

// --- Liouvillian --------------------------------------------------------------

Liouvillian::Liouvillian(const ModelSpec& model, const FockDims& dims) : dims_(dims) {
    if (model.mode_count() != dims.mode_count()) throw std::invalid_argument("model and Fock dims disagree on mode count");
    effective_hamiltonian_ = operator_matrix(dims, model.hamiltonian());
    for (const auto& d : model.dissipators()) {
        const SparseOperator op = monomial_operator(dims, d.jump);
        Jump jump{d.rate, {}, Eigen::VectorXcd(op.nonZeros())};
        Eigen::Index offset = 0;
        for (Eigen::Index row = 0; row < op.outerSize(); ++row) {
            SparseOperator::InnerIterator it(op, row);
            if (!it) continue;
            const Eigen::Index source = it.col();
            jump.values(offset) = it.value();
            if (++it) throw std::logic_error("monomial jump with two entries in one row");
            Run* last = jump.runs.empty() ? nullptr : &jump.runs.back();
            if (last && last->row + last->length == row && last->source + last->length == source) {
                ++last->length;
            } else {
                jump.runs.push_back({row, source, offset, 1});
            }
            ++offset;
        }
        jumps_.push_back(std::move(jump));
        // d†d from the truncated matrices, not the normal-ordered product,
        // so the truncated generator stays exactly trace preserving.
        const SparseOperator number = SparseOperator(op.adjoint()) * op;
        effective_hamiltonian_ -= number * Complex(0.0, d.rate);
    }
    conj_generator_ = (effective_hamiltonian_ * Complex(0.0, -1.0)).conjugate();
}

void Liouvillian::apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
    // L[ρ] = X + X† with X = −i H_eff ρ + ½ Σ 2κ dρd†, valid for Hermitian ρ.
    // Symmetrizing keeps the output exactly Hermitian so rounding cannot seed
    // an anti-Hermitian part, which this form does not damp.
    // The column-major ρ read row-major is ρᵀ = conj(ρ); `scratch_` holds
    // conj(X) so every row update is a plain contiguous axpy.
    const Eigen::Index n = rho.rows();
    const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> t(rho.data(), n, n);
    scratch_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto row = scratch_.row(i);
        row.setZero();
        for (SparseOperator::InnerIterator it(conj_generator_, i); it; ++it) row += it.value() * t.row(it.col());
    }
    for (const auto& j : jumps_) {
        for (const Run& ra : j.runs) {
            for (Eigen::Index a = 0; a < ra.length; ++a) {
                const Complex va = j.rate * std::conj(j.values(ra.offset + a));
                auto dst = scratch_.row(ra.row + a);
                const auto src = t.row(ra.source + a);
                for (const Run& rb : j.runs) {
                    dst.segment(rb.row, rb.length) +=
                        va * j.values.segment(rb.offset, rb.length).transpose().cwiseProduct(src.segment(rb.source, rb.length));
                }
            }
        }
    }
    out = scratch_.conjugate() + scratch_.transpose();
}

Eigen::MatrixXcd liouvillian_apply(const ModelSpec& model, const FockDims& dims, const Eigen::MatrixXcd& rho) {
    Liouvillian l(model, dims);
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    l.apply(rho, out);
    return out;
}

// --- observables --------------------------------------------------------------

Complex expectation(const SparseOperator& op, const Eigen::MatrixXcd& rho) {
    Complex total{};
    for (Eigen::Index i = 0; i < op.outerSize(); ++i) {
        for (SparseOperator::InnerIterator it(op, i); it; ++it) total += it.value() * rho(it.col(), it.row());
    }
    return total;
}

Complex expectation(const DensityMatrix& rho, const Monomial& m) {
    if (m.is_identity()) return rho.entries.trace();
    return expectation(monomial_operator(rho.dims, m), rho.entries);
}

double g2(const DensityMatrix& rho, ModeIndex mode) {
    const double n = expectation(rho, Monomial::number(mode)).real();
    if (!(n > kVacuumFloor)) throw std::domain_error("g2 undefined: mode population below the vacuum floor");
    const Monomial pair = Monomial::from_powers([&] {
        std::vector<unsigned> p(2 * (mode.id + 1), 0);
        p[2 * mode.id] = 2;
        p[2 * mode.id + 1] = 2;
        return p;
    }());
    return expectation(rho, pair).real() / (n * n);
}

double top_level_population(const FockDims& dims, const Eigen::MatrixXcd& rho, ModeIndex mode) {
    const int top = dims.size(mode) - 1;
    double pop = 0.0;
    for (std::size_t i = 0; i < dims.total(); ++i) {
        if (dims.occupation(i, mode) == top) pop += rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    }
    return pop;
}

double top_level_population(const DensityMatrix& rho, ModeIndex mode) {
    return top_level_population(rho.dims, rho.entries, mode);
}

// --- evolution ----------------------------------------------------------------

FstTrajectory evolve(const ModelSpec& model, const DensityMatrix& initial, double horizon, const FstOptions& options) {
    if (!(horizon > 0.0)) throw std::invalid_argument("evolution horizon must be positive");
    if (options.samples < 2) throw std::invalid_argument("at least two samples required");
    const FockDims& dims = initial.dims;
    const Liouvillian liouvillian(model, dims);

    std::vector<SparseOperator> tracked_ops;
    tracked_ops.reserve(options.tracked.size());
    for (const auto& m : options.tracked) tracked_ops.push_back(monomial_operator(dims, m));

    FstTrajectory traj{.times = {},
                       .tracked = options.tracked,
                       .values = {},
                       .states = {},
                       .final_state = initial,
                       .diagnostics = {},
                       .divergence = {},
                       .stats = {}};
    traj.diagnostics.min_eigenvalue = std::numeric_limits<double>::infinity();

    std::size_t sample_index = 0;
    auto record = [&](double t, const Eigen::MatrixXcd& rho) {
        traj.times.push_back(t);
        std::vector<Complex> vals;
        vals.reserve(tracked_ops.size());
        for (const auto& op : tracked_ops) vals.push_back(expectation(op, rho));
        traj.values.push_back(std::move(vals));

        auto& diag = traj.diagnostics;
        diag.max_trace_error = std::max(diag.max_trace_error, std::abs(rho.trace() - 1.0));
        diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        for (std::size_t j = 0; j < dims.mode_count(); ++j) {
            diag.max_top_population = std::max(diag.max_top_population,
                                               top_level_population(dims, rho, ModeIndex(static_cast<std::uint32_t>(j))));
        }
        const bool last = sample_index + 1 == options.samples;
        const bool strided = options.eigen_check_stride > 0 && sample_index % options.eigen_check_stride == 0;
        if (last || strided) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
            diag.min_eigenvalue = std::min(diag.min_eigenvalue, solver.eigenvalues().minCoeff());
            ++diag.eigen_checks;
        }
        if (options.keep_states) traj.states.push_back({dims, rho});
        ++sample_index;
    };

    std::vector<double> grid(options.samples);
    for (std::size_t i = 0; i < options.samples; ++i) {
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(options.samples - 1);
    }
    record(0.0, initial.entries);

    Eigen::MatrixXcd last = initial.entries;
    auto rhs = [&liouvillian](double, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) { liouvillian.apply(rho, out); };
    auto observe = [&](double t, const Eigen::MatrixXcd& rho) {
        record(t, rho);
        last = rho;
    };
    IntegratorLimits limits;
    limits.divergence_bound = 1e6; // entries of a valid ρ are bounded by 1
    auto [div, stats] = integrate_dormand_prince(rhs, initial.entries, 0.0, std::span<const double>(grid).subspan(1),
                                                 options.tolerances, observe, limits);
    traj.divergence = std::move(div);
    traj.stats = stats;
    traj.final_state = {dims, std::move(last)};
    traj.diagnostics.leakage_warning = traj.diagnostics.max_top_population > options.leakage_threshold;
    return traj;
}

// --- dimension convergence ----------------------------------------------------

FockDims doubled(const FockDims& dims) {
    std::vector<int> sizes = dims.sizes();
    for (int& n : sizes) n *= 2;
    return FockDims(std::move(sizes));
}

std::vector<double> convergence_observables(const DensityMatrix& rho) {
    std::vector<double> out;
    const std::size_t modes = rho.dims.mode_count();
    std::vector<double> numbers;
    for (std::size_t j = 0; j < modes; ++j) {
        numbers.push_back(expectation(rho, Monomial::number(ModeIndex(static_cast<std::uint32_t>(j)))).real());
    }
    out = numbers;
    for (std::size_t j = 0; j < modes; ++j) {
        if (numbers[j] > kLadderG2Floor) out.push_back(g2(rho, ModeIndex(static_cast<std::uint32_t>(j))));
    }
    return out;
}

ConvergedFst evolve_converged(const ModelSpec& model, const FockDims& start, double horizon, const FstOptions& options,
                              double rel_tol, std::size_t max_doublings,
                              const std::function<DensityMatrix(const FockDims&)>& initial) {
    ConvergedFst result{evolve(model, initial(start), horizon, options), {}, false};
    FockDims current = start;
    for (std::size_t step = 0; step < max_doublings; ++step) {
        if (result.trajectory.divergence.diverged) break;
        std::optional<FockDims> next;
        try {
            next = doubled(current);
        } catch (const std::length_error&) {
            break;
        }
        FstTrajectory fine = evolve(model, initial(*next), horizon, options);
        const auto before = convergence_observables(result.trajectory.final_state);
        const auto after = convergence_observables(fine.final_state);
        double change = std::numeric_limits<double>::infinity();
        if (before.size() == after.size() && !fine.divergence.diverged) {
            change = 0.0;
            for (std::size_t k = 0; k < before.size(); ++k) {
                change = std::max(change, std::abs(after[k] - before[k]) / std::max(std::abs(after[k]), kVacuumFloor));
            }
        }
        result.ladder.push_back({current, *next, change});
        result.trajectory = std::move(fine);
        current = *next;
        if (change < rel_tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

} // namespace qce
