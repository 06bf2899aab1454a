#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qce/harness/config.hpp"
#include "qce/harness/output.hpp"

namespace qce::harness {

/// Number of tracked quantities: QCE clusters for (modes, order), or FST
/// Fock states n^modes for (modes, truncation).
struct CountRow {
    enum class Kind { qce, fst } kind = Kind::qce;
    std::size_t modes = 0;
    unsigned order = 0;     // qce
    int truncation = 0;     // fst
    std::uint64_t count = 0;
    bool overflow = false;  // n^m beyond 64 bits
};

/// Wall clock of one SHG simulation from vacuum to t = 10/κ_a.
struct TimingRow {
    double drive = 0.0;
    std::string method;  // qce:M or fst
    std::string dims;    // fst only
    std::size_t equations = 0;
    std::vector<double> seconds; // one per repetition
    std::string flag;    // "", "budget", "memory", "diverged"

    double median() const;
};

struct BenchmarkResults {
    std::vector<CountRow> counts;
    std::vector<TimingRow> timings;
    bool partial = false;
    std::vector<std::string> warnings;
};

std::vector<CountRow> cluster_counts(const BenchmarkConfig& config);

/// Times QCE at every configured order and FST with default dims for
/// E ≤ fst_max_E. An FST point slower than the time budget, or too large
/// for memory, stops the FST series there and marks the results partial.
BenchmarkResults run_benchmark(const BenchmarkConfig& config,
                               const std::function<void(const std::string&)>& progress = {});

/// <name>_counts.csv and, when timings exist, <name>_timing.csv, each with a manifest.
std::vector<WrittenFile> write_benchmark(const RunConfig& config, const BenchmarkResults& results,
                                         const std::filesystem::path& dir);

} // namespace qce::harness
