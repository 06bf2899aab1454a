#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qce/dormand_prince.hpp"
#include "qce/model.hpp"
#include "qce/operator_algebra.hpp"

namespace qce {

using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Per-mode Fock truncation n_j ≥ 2. Basis states are ordered with mode 0
/// varying slowest.
class FockDims {
public:
    /// Bytes the solver may spend on density-matrix-sized work buffers.
    static constexpr std::size_t kDefaultMemoryBudget = std::size_t{3} << 30;
    /// Density-matrix-sized buffers held during one evolution.
    static constexpr std::size_t kWorkingCopies = 14;

    explicit FockDims(std::vector<int> sizes, std::size_t memory_budget = kDefaultMemoryBudget);

    std::size_t mode_count() const { return sizes_.size(); }
    int size(ModeIndex mode) const { return sizes_.at(mode.id); }
    const std::vector<int>& sizes() const { return sizes_; }
    std::size_t total() const { return total_; }
    std::size_t stride(ModeIndex mode) const { return strides_.at(mode.id); }
    int occupation(std::size_t index, ModeIndex mode) const;

    std::string to_string() const; // e.g. "40x20"

    bool operator==(const FockDims&) const = default;

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 1;
};

/// n_a = ⌈max(E², 4)⌉, n_b = ⌈n_a / 2⌉ for the two-mode χ(2) models.
FockDims default_dims(double drive);

struct DensityMatrix {
    FockDims dims;
    Eigen::MatrixXcd entries;
};

DensityMatrix vacuum_density(const FockDims& dims);
DensityMatrix fock_density(const FockDims& dims, const std::vector<int>& occupations);
/// Product of thermal states with mean occupations `nbar` (renormalized after truncation).
DensityMatrix thermal_density(const FockDims& dims, const std::vector<double>& nbar);
/// Product of coherent states (renormalized after truncation).
DensityMatrix coherent_density(const FockDims& dims, const std::vector<Complex>& alphas);

/// Truncated annihilation operator of mode j: ⟨n−1|a|n⟩ = √n, identity elsewhere.
SparseOperator mode_operator(const FockDims& dims, ModeIndex mode);
/// Π_j a_j†^{p_j} a_j^{q_j} with exact matrix elements inside the truncation.
SparseOperator monomial_operator(const FockDims& dims, const Monomial& m);
SparseOperator operator_matrix(const FockDims& dims, const OperatorPoly& p);

/// Action of −i[H,·] + Σ κ_j(2dρd† − d†dρ − ρd†d) on dense density matrices.
class Liouvillian {
public:
    Liouvillian(const ModelSpec& model, const FockDims& dims);

    /// `out` = L[rho]. `rho` must be Hermitian (the result is Hermitian by construction).
    void apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const;

    const FockDims& dims() const { return dims_; }

private:
    // A monomial jump maps each basis state to at most one basis state, so
    // dρd† is a gather: (dρd†)_ij = v_i conj(v_j) ρ(src_i, src_j). Entries
    // are grouped into runs where row and source both advance by one.
    struct Run {
        Eigen::Index row;
        Eigen::Index source;
        Eigen::Index offset; // into `values`
        Eigen::Index length;
    };
    struct Jump {
        double rate;
        std::vector<Run> runs;
        Eigen::VectorXcd values;
    };

    FockDims dims_;
    SparseOperator effective_hamiltonian_; // H − i Σ κ d†d
    SparseOperator conj_generator_;        // conj(−i H_eff)
    std::vector<Jump> jumps_;
    mutable Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> scratch_;
};

Eigen::MatrixXcd liouvillian_apply(const ModelSpec& model, const FockDims& dims, const Eigen::MatrixXcd& rho);

Complex expectation(const DensityMatrix& rho, const Monomial& m);
/// Tr(A ρ) for a prebuilt operator.
Complex expectation(const SparseOperator& op, const Eigen::MatrixXcd& rho);

/// ⟨O†O†OO⟩ / ⟨O†O⟩²; throws std::domain_error when ⟨O†O⟩ ≤ 1e-10.
double g2(const DensityMatrix& rho, ModeIndex mode);

/// Population of the highest retained Fock level of `mode`.
double top_level_population(const DensityMatrix& rho, ModeIndex mode);
double top_level_population(const FockDims& dims, const Eigen::MatrixXcd& rho, ModeIndex mode);

struct FstOptions {
    /// The absolute floor is far below 1 because observables of nearly empty
    /// modes (g2 at ⟨O†O⟩ ~ 1e-5) live in entries of order 1e-12.
    Tolerances tolerances{1e-10, 1e-18};
    std::size_t samples = 201;
    /// Monomials whose expectations are recorded at each sample.
    std::vector<Monomial> tracked;
    bool keep_states = false;
    /// Check the minimum eigenvalue every this many samples (plus the last); 0 = last only.
    std::size_t eigen_check_stride = 50;
    double leakage_threshold = 1e-6;
};

struct FstDiagnostics {
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
    /// Largest top-level population over all modes and samples.
    double max_top_population = 0.0;
    bool leakage_warning = false;
    std::size_t eigen_checks = 0;
};

struct FstTrajectory {
    std::vector<double> times;
    std::vector<Monomial> tracked;
    /// values[s][k] = ⟨tracked[k]⟩ at times[s].
    std::vector<std::vector<Complex>> values;
    std::vector<DensityMatrix> states; // only with keep_states
    DensityMatrix final_state;
    FstDiagnostics diagnostics;
    Divergence divergence;
    IntegrationStats stats;
};

/// Integrates the master equation from `initial` over [0, horizon].
FstTrajectory evolve(const ModelSpec& model, const DensityMatrix& initial, double horizon,
                     const FstOptions& options = {});

/// Both sizes of every mode doubled (same memory budget rules).
FockDims doubled(const FockDims& dims);

struct ConvergenceStep {
    FockDims coarse;
    FockDims fine;
    /// Largest relative change of ⟨O†O⟩ and g2 (where defined) over all modes.
    double max_relative_change = 0.0;
};

struct ConvergedFst {
    FstTrajectory trajectory; // at the finest dims reached
    std::vector<ConvergenceStep> ladder;
    bool converged = false;
};

/// g2 enters the doubling check only for modes holding more than this many
/// photons. Below it ⟨O†²O²⟩ is a sum of entries near the integrator's
/// absolute floor, and its relative change between two runs is set by the
/// integration error rather than by the truncation.
inline constexpr double kLadderG2Floor = 1e-3;

/// Observables compared by the doubling check, in a fixed order: ⟨O†O⟩ for
/// every mode, then g2 for every mode with population above kLadderG2Floor.
std::vector<double> convergence_observables(const DensityMatrix& rho);

/// Evolves at `start`, then at doubled dims until the end-of-horizon
/// observables change by less than `rel_tol` relative, at most
/// `max_doublings` times. The returned trajectory is the finest run. A
/// doubling that would exceed the memory budget stops the ladder unconverged.
ConvergedFst evolve_converged(const ModelSpec& model, const FockDims& start, double horizon,
                              const FstOptions& options = {}, double rel_tol = 1e-4, std::size_t max_doublings = 3,
                              const std::function<DensityMatrix(const FockDims&)>& initial = vacuum_density);

} // namespace qce
