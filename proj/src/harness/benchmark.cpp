#include "qce/harness/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "qce/cluster_engine.hpp"
#include "qce/fst_reference.hpp"
#include "qce/moment_integrator.hpp"

namespace qce::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ChiTwoParameters shg_at(double g, double drive) {
    ChiTwoParameters p;
    p.g = g;
    p.drive = drive;
    return p;
}

} // namespace

double TimingRow::median() const {
    if (seconds.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> s = seconds;
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

std::vector<CountRow> cluster_counts(const BenchmarkConfig& config) {
    std::vector<CountRow> rows;
    for (unsigned order : config.orders) {
        for (std::size_t m = 1; m <= config.max_modes; ++m) {
            CountRow r;
            r.kind = CountRow::Kind::qce;
            r.modes = m;
            r.order = order;
            r.count = count_clusters(m, order);
            rows.push_back(r);
        }
    }
    for (int n : config.fst_truncations) {
        std::uint64_t states = 1;
        bool overflow = false;
        for (std::size_t m = 1; m <= config.max_modes; ++m) {
            overflow = overflow || states > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(n);
            if (!overflow) states *= static_cast<std::uint64_t>(n);
            CountRow r;
            r.kind = CountRow::Kind::fst;
            r.modes = m;
            r.truncation = n;
            r.count = overflow ? 0 : states;
            r.overflow = overflow;
            rows.push_back(r);
        }
    }
    return rows;
}

BenchmarkResults run_benchmark(const BenchmarkConfig& config, const std::function<void(const std::string&)>& progress) {
    BenchmarkResults out;
    out.counts = cluster_counts(config);
    auto note = [&](const std::string& s) {
        if (progress) progress(s);
    };
    constexpr double horizon = 10.0;
    bool fst_stopped = false;
    for (double drive : config.drives) {
        const ModelSpec model = shg_model(shg_at(config.g, drive));
        for (unsigned order : config.timing_orders) {
            TimingRow row;
            row.drive = drive;
            row.method = "qce:" + std::to_string(order);
            for (std::size_t rep = 0; rep < config.repeats; ++rep) {
                const auto t0 = Clock::now();
                const auto system = build_system(model, order);
                const Trajectory traj = integrate(system, vacuum_state(system.basis()), horizon, {}, 2);
                row.seconds.push_back(seconds_since(t0));
                row.equations = system.size();
                if (traj.divergence.diverged) row.flag = "diverged";
            }
            note(row.method + " E=" + format_number(drive) + ": " + format_number(row.median()) + " s");
            out.timings.push_back(std::move(row));
        }
        if (fst_stopped || drive > config.fst_max_drive) continue;
        TimingRow row;
        row.drive = drive;
        row.method = "fst";
        try {
            const FockDims dims = default_dims(drive);
            row.dims = dims.to_string();
            row.equations = dims.total();
            FstOptions options;
            options.samples = 2;
            for (std::size_t rep = 0; rep < config.repeats; ++rep) {
                const auto t0 = Clock::now();
                const auto traj = evolve(model, vacuum_density(dims), horizon, options);
                row.seconds.push_back(seconds_since(t0));
                if (traj.divergence.diverged) row.flag = "diverged";
                // Repeat only while the total stays inside the budget.
                if (row.seconds.back() * static_cast<double>(rep + 2) > config.time_budget) break;
            }
            if (row.seconds.back() > config.time_budget) {
                row.flag = "budget";
                fst_stopped = true;
            }
        } catch (const std::length_error& e) {
            row.flag = "memory";
            fst_stopped = true;
            out.warnings.push_back(std::string("FST at E=") + format_number(drive) + ": " + e.what());
        }
        if (fst_stopped) {
            out.partial = true;
            out.warnings.push_back("FST timing stopped at E=" + format_number(drive) + " (" + row.flag + ")");
        }
        note("fst E=" + format_number(drive) + " " + row.dims + ": " + format_number(row.median()) + " s");
        out.timings.push_back(std::move(row));
    }
    return out;
}

std::vector<WrittenFile> write_benchmark(const RunConfig& config, const BenchmarkResults& results,
                                         const std::filesystem::path& dir) {
    std::vector<WrittenFile> files;
    auto head = [&](const std::filesystem::path& csv, const char* kind, const std::vector<std::string>& header) {
        nlohmann::json m;
        m["csv"] = csv.filename().string();
        m["kind"] = kind;
        m["engine_version"] = engine_version();
        m["config"] = config_json(config);
        m["columns"] = header;
        m["partial"] = results.partial;
        m["warnings"] = results.warnings;
        return m;
    };

    const auto counts_csv = dir / (config.name + "_counts.csv");
    const std::vector<std::string> count_header{"method", "modes", "order", "truncation", "count", "flags"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : results.counts) {
        const bool qce = r.kind == CountRow::Kind::qce;
        rows.push_back({qce ? "qce" : "fst", std::to_string(r.modes), qce ? std::to_string(r.order) : "",
                        qce ? "" : std::to_string(r.truncation), r.overflow ? "" : std::to_string(r.count),
                        r.overflow ? "overflow" : ""});
    }
    write_csv(counts_csv, count_header, rows);
    write_json(manifest_path(counts_csv), head(counts_csv, "cluster_counts", count_header));
    files.push_back({counts_csv, manifest_path(counts_csv), results.warnings.size()});

    if (results.timings.empty()) return files;
    const auto timing_csv = dir / (config.name + "_timing.csv");
    const std::vector<std::string> timing_header{"E", "method", "dims", "equations", "median_seconds", "min_seconds",
                                                 "repeats", "flags"};
    rows.clear();
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& r : results.timings) {
        const double min = r.seconds.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : *std::min_element(r.seconds.begin(), r.seconds.end());
        rows.push_back({format_number(r.drive), r.method, r.dims, std::to_string(r.equations), format_number(r.median()),
                        format_number(min), std::to_string(r.seconds.size()), r.flag});
        samples.push_back({{"E", r.drive}, {"method", r.method}, {"seconds", r.seconds}});
    }
    write_csv(timing_csv, timing_header, rows);
    auto m = head(timing_csv, "timing", timing_header);
    m["samples"] = samples;
    write_json(manifest_path(timing_csv), m);
    files.push_back({timing_csv, manifest_path(timing_csv), results.warnings.size()});
    return files;
}

} // namespace qce::harness
