#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qce/dormand_prince.hpp"
#include "qce/fst_reference.hpp"
#include "qce/model.hpp"

namespace qce::harness {

/// Schema violation, with the source position when the error came from a file.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, int line, int column, const std::string& message);
    explicit ConfigError(const std::string& message);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_ = -1;
    int column_ = -1;
};

enum class ModelKind { shg, opo, custom };

struct HamiltonianTerm {
    Complex coefficient = 1.0;
    std::string word;
};

struct JumpTerm {
    double rate = 0.0;
    std::string jump;
};

struct ModelConfig {
    ModelKind kind = ModelKind::shg;
    ChiTwoParameters params;
    // custom models only
    std::size_t modes = 0;
    std::vector<HamiltonianTerm> hamiltonian;
    std::vector<JumpTerm> dissipators;
};

ModelSpec make_model(const ModelConfig& config);

enum class MethodKind { mfa, qce, fst };

struct MethodSpec {
    MethodKind kind = MethodKind::mfa;
    unsigned order = 1;                // mfa is order 1
    std::optional<std::vector<int>> dims; // fst only; empty = default dims
    bool ladder = false;               // fst:auto

    /// Text form accepted by parse_method: mfa, qce:4, fst, fst:30x15, fst:auto.
    std::string text() const;
    /// Filename-safe form: mfa, qce4, fst, fst_30x15, fst_auto.
    std::string slug() const;
    bool supports_g2() const { return kind == MethodKind::fst || (kind == MethodKind::qce && order >= 4); }
};

/// Throws std::invalid_argument on bad syntax.
MethodSpec parse_method(const std::string& text);

struct SweepAxis {
    std::string parameter; // "g" or "E"
    std::vector<double> values;
};

enum class RunMode { run, compare };

struct FstSettings {
    Tolerances tolerances = FstOptions{}.tolerances;
    double ladder_rel_tol = 1e-4;
    std::size_t max_doublings = 3;
};

struct BenchmarkConfig {
    std::size_t max_modes = 10;
    std::vector<unsigned> orders{1, 2, 3, 4};
    std::vector<int> fst_truncations{4, 8, 16};
    std::vector<double> drives;       // timing rows; empty = counts only
    double g = 0.1;
    std::vector<unsigned> timing_orders{2, 4};
    std::size_t repeats = 3;
    double fst_max_drive = 5.0;       // FST timing rows stop above this E
    double time_budget = 600.0;       // seconds per FST timing point
};

/// One configuration file. Sweep grids are strictly increasing; an empty
/// sweep is a single-point dynamics run.
struct RunConfig {
    std::string name = "run";
    RunMode mode = RunMode::run;
    ModelConfig model;
    std::vector<MethodSpec> methods;
    double horizon = 10.0; // 10/κ_a unless set
    std::size_t samples = 201;
    Tolerances tolerances{1e-8, 1e-10};
    FstSettings fst;
    std::vector<std::string> observables{"n_a", "n_b"};
    std::vector<SweepAxis> sweep;
    /// ⟨a⟩ = i·seed at t = 0 for the moment methods (0 = vacuum).
    double seed = 0.0;
    std::size_t threads = 0; // 0 = hardware concurrency
    std::filesystem::path output = "out";
    std::string reference; // compare: method text of the reference; empty = first fst, else first
    std::optional<BenchmarkConfig> benchmark;

    bool is_sweep() const { return !sweep.empty(); }
};

RunConfig load_config(const std::filesystem::path& path);
/// `source_name` is used in error messages.
RunConfig parse_config(const std::string& text, const std::string& source_name = "<config>");

/// Cross-field checks (methods present, g2 support, custom-model limits).
/// Throws ConfigError.
void validate(const RunConfig& config);

} // namespace qce::harness
