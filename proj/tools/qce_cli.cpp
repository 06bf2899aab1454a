// Command-line front end: run / compare / benchmark / presets / equations.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qce/cluster_engine.hpp"
#include "qce/harness/benchmark.hpp"
#include "qce/harness/config.hpp"
#include "qce/harness/output.hpp"
#include "qce/harness/runner.hpp"

#ifndef QCE_PRESET_DIR
#define QCE_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace qce::harness;

namespace {

enum Exit { ok = 0, failure = 1, schema = 2, all_failed = 3 };

struct Overrides {
    std::optional<fs::path> out;
    std::optional<std::size_t> threads;
    std::optional<double> rtol, atol, fst_rtol, fst_atol;

    void add_to(CLI::App* app) {
        app->add_option("-o,--out", out, "Output directory (overrides the config)");
        app->add_option("-j,--threads", threads, "Worker threads (0 = all cores)");
        app->add_option("--rtol", rtol, "Relative tolerance for moment integration")->check(CLI::PositiveNumber);
        app->add_option("--atol", atol, "Absolute tolerance for moment integration")->check(CLI::PositiveNumber);
        app->add_option("--fst-rtol", fst_rtol, "Relative tolerance for FST")->check(CLI::PositiveNumber);
        app->add_option("--fst-atol", fst_atol, "Absolute tolerance for FST")->check(CLI::PositiveNumber);
    }

    void apply(RunConfig& c) const {
        if (out) c.output = *out;
        if (threads) c.threads = *threads;
        if (rtol) c.tolerances.rel = *rtol;
        if (atol) c.tolerances.abs = *atol;
        if (fst_rtol) c.fst.tolerances.rel = *fst_rtol;
        if (fst_atol) c.fst.tolerances.abs = *fst_atol;
    }
};

fs::path preset_dir(const std::optional<fs::path>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("QCE_PRESET_DIR")) return env;
    return QCE_PRESET_DIR;
}

int execute_config(RunConfig config, bool force_compare) {
    if (force_compare) config.mode = RunMode::compare;
    validate(config);
    if (config.methods.empty()) throw ConfigError(config.name + ": nothing to run (no methods)");
    SystemCache cache;
    std::cerr << "running " << config.name << ": " << config.methods.size() << " method(s) x "
              << sweep_points(config).size() << " point(s)\n";
    const RunResults results = execute(config, cache);
    std::vector<WrittenFile> files;
    if (config.mode == RunMode::compare) files.push_back(write_compare(config, results, cache, config.output));
    else files = write_run(config, results, cache, config.output);

    std::size_t failed = 0, total = 0;
    for (const auto& per_method : results.runs) {
        for (const auto& r : per_method) {
            ++total;
            if (r.failed) ++failed;
        }
    }
    for (const auto& f : files) {
        std::cout << f.csv.string() << '\n';
        if (f.warnings) std::cerr << "  " << f.warnings << " warning(s), see " << f.manifest.string() << '\n';
    }
    std::cerr << "done in " << format_number(results.wall_seconds) << " s\n";
    return total > 0 && failed == total ? all_failed : ok;
}

int execute_benchmark(RunConfig config) {
    if (!config.benchmark) config.benchmark = BenchmarkConfig{};
    const auto results = run_benchmark(*config.benchmark, [](const std::string& s) { std::cerr << s << '\n'; });
    for (const auto& f : write_benchmark(config, results, config.output)) std::cout << f.csv.string() << '\n';
    if (results.partial) std::cerr << "partial results: " << results.warnings.back() << '\n';
    return ok;
}

std::vector<fs::path> list_presets(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".yaml") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// First comment line of a preset, used as its description.
std::string preset_summary(const fs::path& file) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) return line.substr(2);
    }
    return "";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum cluster expansion for driven-dissipative chi(2) cavities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", engine_version());

    Overrides run_flags, compare_flags, preset_flags, bench_flags;
    fs::path run_config, compare_config, equations_config;
    std::optional<fs::path> bench_config, preset_path;

    auto* run = app.add_subcommand("run", "Run every method of a config (one CSV + manifest per method)");
    run->add_option("config", run_config, "YAML configuration")->required()->check(CLI::ExistingFile);
    run_flags.add_to(run);

    auto* compare = app.add_subcommand("compare", "Run all methods of a config into one comparison CSV");
    compare->add_option("config", compare_config, "YAML configuration")->required()->check(CLI::ExistingFile);
    compare_flags.add_to(compare);

    auto* bench = app.add_subcommand("benchmark", "Cluster/state counts and SHG wall-clock scaling");
    bench->add_option("config", bench_config, "Optional YAML configuration with a benchmark section");
    BenchmarkConfig bench_cli;
    std::optional<std::size_t> max_modes, repeats;
    std::optional<std::vector<unsigned>> orders, timing_orders;
    std::optional<std::vector<double>> drives;
    std::optional<double> bench_g, fst_max, budget;
    bench->add_option("--max-modes", max_modes, "Largest mode count in the count table");
    bench->add_option("--orders", orders, "Cluster orders for the count table")->delimiter(',');
    bench->add_option("--timing-orders", timing_orders, "QCE orders to time")->delimiter(',');
    bench->add_option("--E", drives, "Drive strengths to time (comma separated)")->delimiter(',');
    bench->add_option("--g", bench_g, "Coupling for the timing runs");
    bench->add_option("--repeats", repeats, "Repetitions per timing point (median is reported)");
    bench->add_option("--fst-max-E", fst_max, "Largest E timed with FST");
    bench->add_option("--time-budget", budget, "Seconds allowed per FST timing point");
    bench_flags.add_to(bench);

    auto* presets = app.add_subcommand("presets", "List, show or run the shipped figure presets");
    presets->add_option("--preset-dir", preset_path, "Directory holding the preset YAML files");
    presets->require_subcommand(0, 1);
    auto* p_list = presets->add_subcommand("list", "List presets (default)");
    std::string preset_name;
    auto* p_show = presets->add_subcommand("show", "Print a preset");
    p_show->add_option("name", preset_name)->required();
    auto* p_run = presets->add_subcommand("run", "Run a preset");
    p_run->add_option("name", preset_name)->required();
    preset_flags.add_to(p_run);

    auto* equations = app.add_subcommand("equations", "Print the closed moment equations of a config's model");
    equations->add_option("config", equations_config, "YAML configuration")->required()->check(CLI::ExistingFile);
    unsigned eq_order = 2;
    equations->add_option("-M,--order", eq_order, "Cluster order")->check(CLI::Range(1u, 12u));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : schema;
    }

    try {
        if (run->parsed()) {
            RunConfig c = load_config(run_config);
            run_flags.apply(c);
            return execute_config(std::move(c), false);
        }
        if (compare->parsed()) {
            RunConfig c = load_config(compare_config);
            compare_flags.apply(c);
            return execute_config(std::move(c), true);
        }
        if (bench->parsed()) {
            RunConfig c;
            c.name = "benchmark";
            if (bench_config) c = load_config(*bench_config);
            BenchmarkConfig b = c.benchmark.value_or(BenchmarkConfig{});
            if (max_modes) b.max_modes = *max_modes;
            if (orders) b.orders = *orders;
            if (timing_orders) b.timing_orders = *timing_orders;
            if (drives) b.drives = *drives;
            if (bench_g) b.g = *bench_g;
            if (repeats) b.repeats = *repeats;
            if (fst_max) b.fst_max_drive = *fst_max;
            if (budget) b.time_budget = *budget;
            c.benchmark = b;
            bench_flags.apply(c);
            return execute_benchmark(std::move(c));
        }
        if (presets->parsed()) {
            const fs::path dir = preset_dir(preset_path);
            if (p_show->parsed() || p_run->parsed()) {
                const fs::path file = dir / (preset_name + ".yaml");
                if (!fs::exists(file)) {
                    std::cerr << "unknown preset '" << preset_name << "' in " << dir.string() << '\n';
                    return schema;
                }
                if (p_show->parsed()) {
                    std::cout << std::ifstream(file).rdbuf();
                    return ok;
                }
                RunConfig c = load_config(file);
                preset_flags.apply(c);
                if (c.methods.empty() && c.benchmark) return execute_benchmark(std::move(c));
                return execute_config(std::move(c), false);
            }
            (void)p_list;
            const auto files = list_presets(dir);
            if (files.empty()) std::cerr << "no presets found in " << dir.string() << '\n';
            for (const auto& f : files) std::cout << f.stem().string() << "\t" << preset_summary(f) << '\n';
            return ok;
        }
        if (equations->parsed()) {
            const RunConfig c = load_config(equations_config);
            const auto system = qce::build_system(make_model(c.model), eq_order);
            std::cout << "# " << system.label() << ": " << system.size() << " clusters, " << system.term_count()
                      << " terms\n"
                      << system.dump();
            return ok;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return schema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return ok;
}
