#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qce/harness/config.hpp"
#include "qce/harness/runner.hpp"

namespace qce::harness {

std::string engine_version();

/// Every value is written with 17 significant digits.
std::string format_number(double value);

/// UTF-8 CSV with a header row. Fields containing ',', '"' or newlines are quoted.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// foo.csv → foo.manifest.json
std::filesystem::path manifest_path(const std::filesystem::path& csv);
void write_json(const std::filesystem::path& path, const nlohmann::json& body);

nlohmann::json config_json(const RunConfig& config);
nlohmann::json run_json(const MethodRun& run);

struct WrittenFile {
    std::filesystem::path csv;
    std::filesystem::path manifest;
    std::size_t warnings = 0;
};

/// One CSV per method: a trajectory (time + observables) for single-point
/// runs, a steady-state table (axes + observables + flags) for sweeps.
std::vector<WrittenFile> write_run(const RunConfig& config, const RunResults& results, const SystemCache& cache,
                                   const std::filesystem::path& dir);

/// One CSV with every method's columns side by side (suffix @<method>) and
/// dev_<column>@<method> = |x − x_ref| / |x_ref| for every non-reference method.
WrittenFile write_compare(const RunConfig& config, const RunResults& results, const SystemCache& cache,
                          const std::filesystem::path& dir);

/// Index of the reference method: `reference` if set, else the first fst, else 0.
std::size_t reference_index(const RunConfig& config);

/// Method slugs made unique by appending #2, #3, ... to repeats.
std::vector<std::string> unique_slugs(const std::vector<MethodSpec>& methods);

} // namespace qce::harness
