#include "qce/harness/output.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#ifndef QCE_VERSION
#define QCE_VERSION "0.0.0"
#endif

namespace qce::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string engine_version() { return QCE_VERSION; }

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", value);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
    return out;
}

json point_json(const Point& p) {
    json j = json::object();
    for (const auto& [name, value] : p.axes) j[name] = value;
    return j;
}

std::string point_text(const Point& p) {
    std::string out;
    for (const auto& [name, value] : p.axes) out += (out.empty() ? "" : ",") + name + "=" + format_number(value);
    return out;
}

json tolerances_json(const Tolerances& t) { return {{"rel", t.rel}, {"abs", t.abs}}; }

// Common manifest head; `runs` lists every MethodRun that fed the CSV.
json manifest(const RunConfig& config, const RunResults& results, const SystemCache& cache, const fs::path& csv,
              const std::string& kind, const std::vector<std::string>& columns, const std::vector<const MethodRun*>& runs) {
    json m;
    m["csv"] = csv.filename().string();
    m["kind"] = kind;
    m["engine_version"] = engine_version();
    m["config"] = config_json(config);
    m["columns"] = columns;
    m["total_wall_seconds"] = results.wall_seconds;
    m["system_cache"] = {{"entries", cache.size()}, {"hits", cache.hits()}};
    json list = json::array();
    json warnings = json::array();
    for (const MethodRun* r : runs) {
        list.push_back(run_json(*r));
        for (const auto& w : r->warnings) {
            const std::string where = r->point.axes.empty() ? r->method.text() : r->method.text() + " at " + point_text(r->point);
            warnings.push_back(where + ": " + w);
        }
    }
    m["runs"] = std::move(list);
    m["warnings"] = std::move(warnings);
    return m;
}

double deviation(double x, double ref) {
    if (x == ref) return 0.0;
    if (std::isnan(x) || std::isnan(ref) || ref == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::abs(x - ref) / std::abs(ref);
}

} // namespace

void write_csv(const fs::path& path, const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

fs::path manifest_path(const fs::path& csv) {
    fs::path p = csv;
    p.replace_extension(".manifest.json");
    return p;
}

void write_json(const fs::path& path, const json& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body.dump(2) << '\n';
}

json config_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    j["mode"] = c.mode == RunMode::run ? "run" : "compare";
    json model;
    switch (c.model.kind) {
    case ModelKind::shg: model["kind"] = "shg"; break;
    case ModelKind::opo: model["kind"] = "opo"; break;
    case ModelKind::custom: model["kind"] = "custom"; break;
    }
    if (c.model.kind == ModelKind::custom) {
        model["modes"] = c.model.modes;
        json h = json::array();
        for (const auto& t : c.model.hamiltonian) h.push_back({{"coeff", {t.coefficient.real(), t.coefficient.imag()}}, {"word", t.word}});
        model["hamiltonian"] = h;
        json d = json::array();
        for (const auto& t : c.model.dissipators) d.push_back({{"rate", t.rate}, {"jump", t.jump}});
        model["dissipators"] = d;
    } else {
        const auto& p = c.model.params;
        model["g"] = p.g;
        model["E"] = p.drive;
        model["kappa_a"] = p.kappa_a;
        model["kappa_b"] = p.kappa_b;
        model["delta_a"] = p.detuning_a;
        model["delta_b"] = p.detuning_b;
    }
    j["model"] = model;
    json methods = json::array();
    for (const auto& m : c.methods) methods.push_back(m.text());
    j["methods"] = methods;
    j["horizon"] = c.horizon;
    j["samples"] = c.samples;
    j["tolerances"] = tolerances_json(c.tolerances);
    j["fst"] = {{"rel", c.fst.tolerances.rel}, {"abs", c.fst.tolerances.abs}, {"ladder_rel_tol", c.fst.ladder_rel_tol},
                {"max_doublings", c.fst.max_doublings}};
    j["observables"] = c.observables;
    json sweep = json::object();
    for (const auto& axis : c.sweep) sweep[axis.parameter] = axis.values;
    j["sweep"] = sweep;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output"] = c.output.string();
    if (!c.reference.empty()) j["reference"] = c.reference;
    if (c.benchmark) {
        const auto& b = *c.benchmark;
        j["benchmark"] = {{"max_modes", b.max_modes},         {"orders", b.orders},   {"fst_truncations", b.fst_truncations},
                          {"E", b.drives},                    {"g", b.g},             {"timing_orders", b.timing_orders},
                          {"repeats", b.repeats},             {"fst_max_E", b.fst_max_drive},
                          {"time_budget", b.time_budget}};
    }
    return j;
}

json run_json(const MethodRun& r) {
    json j;
    j["method"] = r.method.text();
    j["point"] = point_json(r.point);
    j["wall_seconds"] = r.wall_seconds;
    j[r.method.kind == MethodKind::fst ? "fock_states" : "clusters"] = r.equations;
    if (!r.fock_dims.empty()) j["fock_dims"] = r.fock_dims;
    j["diverged"] = r.diverged;
    if (r.diverged) {
        j["divergence_time"] = r.divergence_time;
        j["divergence_reason"] = r.divergence_reason;
    }
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    if (r.method.kind != MethodKind::fst && !r.diverged && !r.failed) j["rhs_residual"] = r.residual;
    if (r.fst) {
        const auto& d = *r.fst;
        j["leakage_warning"] = r.leakage;
        j["fst_diagnostics"] = {{"max_trace_error", d.max_trace_error},
                                {"max_hermiticity_error", d.max_hermiticity_error},
                                {"min_eigenvalue", d.min_eigenvalue},
                                {"max_top_population", d.max_top_population},
                                {"eigen_checks", d.eigen_checks}};
    }
    if (r.method.ladder) {
        json ladder = json::array();
        for (const auto& s : r.ladder) {
            ladder.push_back({{"coarse", s.coarse.to_string()}, {"fine", s.fine.to_string()}, {"max_relative_change", s.max_relative_change}});
        }
        j["ladder"] = ladder;
        j["converged"] = !r.unconverged;
    }
    j["warnings"] = r.warnings;
    return j;
}

std::vector<std::string> unique_slugs(const std::vector<MethodSpec>& methods) {
    std::vector<std::string> out;
    std::map<std::string, int> seen;
    for (const auto& m : methods) {
        const std::string s = m.slug();
        const int n = ++seen[s];
        out.push_back(n == 1 ? s : s + "#" + std::to_string(n));
    }
    return out;
}

std::size_t reference_index(const RunConfig& config) {
    for (std::size_t i = 0; i < config.methods.size(); ++i) {
        if (!config.reference.empty() && config.methods[i].text() == config.reference) return i;
    }
    if (config.reference.empty()) {
        for (std::size_t i = 0; i < config.methods.size(); ++i) {
            if (config.methods[i].kind == MethodKind::fst) return i;
        }
    }
    return 0;
}

std::vector<WrittenFile> write_run(const RunConfig& config, const RunResults& results, const SystemCache& cache,
                                   const fs::path& dir) {
    std::vector<WrittenFile> files;
    const auto slugs = unique_slugs(config.methods);
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        const fs::path csv = dir / (config.name + "_" + slugs[m] + ".csv");
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;
        std::vector<const MethodRun*> runs;
        if (results.dynamics) {
            header.push_back("time");
            header.insert(header.end(), results.columns.begin(), results.columns.end());
            const MethodRun& r = results.runs[m][0];
            runs.push_back(&r);
            for (std::size_t s = 0; s < r.times.size(); ++s) {
                std::vector<std::string> row{format_number(r.times[s])};
                for (double v : r.rows[s]) row.push_back(format_number(v));
                rows.push_back(std::move(row));
            }
        } else {
            for (const auto& axis : config.sweep) header.push_back(axis.parameter);
            header.insert(header.end(), results.columns.begin(), results.columns.end());
            header.push_back("flags");
            for (std::size_t p = 0; p < results.points.size(); ++p) {
                const MethodRun& r = results.runs[m][p];
                runs.push_back(&r);
                std::vector<std::string> row;
                for (const auto& [name, value] : results.points[p].axes) row.push_back(format_number(value));
                for (double v : r.rows.back()) row.push_back(format_number(v));
                row.push_back(join(r.flags(), ";"));
                rows.push_back(std::move(row));
            }
        }
        write_csv(csv, header, rows);
        json body = manifest(config, results, cache, csv, results.dynamics ? "trajectory" : "table", header, runs);
        const std::size_t warnings = body["warnings"].size();
        write_json(manifest_path(csv), body);
        files.push_back({csv, manifest_path(csv), warnings});
    }
    return files;
}

WrittenFile write_compare(const RunConfig& config, const RunResults& results, const SystemCache& cache,
                          const fs::path& dir) {
    const fs::path csv = dir / (config.name + "_compare.csv");
    const auto slugs = unique_slugs(config.methods);
    const std::size_t ref = reference_index(config);
    const std::size_t n_methods = config.methods.size();
    const std::size_t n_cols = results.columns.size();

    std::vector<std::string> header;
    if (results.dynamics) header.push_back("time");
    else for (const auto& axis : config.sweep) header.push_back(axis.parameter);
    for (std::size_t m = 0; m < n_methods; ++m) {
        for (const auto& c : results.columns) header.push_back(c + "@" + slugs[m]);
    }
    for (std::size_t m = 0; m < n_methods; ++m) {
        if (m == ref) continue;
        for (const auto& c : results.columns) header.push_back("dev_" + c + "@" + slugs[m]);
    }
    if (!results.dynamics) {
        for (std::size_t m = 0; m < n_methods; ++m) header.push_back("flags@" + slugs[m]);
    }

    // Rows: time samples of the single point, or sweep points. A method whose
    // trajectory stopped early contributes nan past its last sample.
    const std::size_t n_rows = results.dynamics ? config.samples : results.points.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto value = [&](std::size_t m, std::size_t row, std::size_t col) {
        const MethodRun& r = results.dynamics ? results.runs[m][0] : results.runs[m][row];
        const std::size_t s = results.dynamics ? row : r.rows.size() - 1;
        return s < r.rows.size() ? r.rows[s][col] : nan;
    };
    std::vector<std::vector<std::string>> rows;
    for (std::size_t row = 0; row < n_rows; ++row) {
        std::vector<std::string> out;
        if (results.dynamics) {
            out.push_back(format_number(config.horizon * static_cast<double>(row) / static_cast<double>(config.samples - 1)));
        } else {
            for (const auto& [name, v] : results.points[row].axes) out.push_back(format_number(v));
        }
        for (std::size_t m = 0; m < n_methods; ++m) {
            for (std::size_t c = 0; c < n_cols; ++c) out.push_back(format_number(value(m, row, c)));
        }
        for (std::size_t m = 0; m < n_methods; ++m) {
            if (m == ref) continue;
            for (std::size_t c = 0; c < n_cols; ++c) out.push_back(format_number(deviation(value(m, row, c), value(ref, row, c))));
        }
        if (!results.dynamics) {
            for (std::size_t m = 0; m < n_methods; ++m) out.push_back(join(results.runs[m][row].flags(), ";"));
        }
        rows.push_back(std::move(out));
    }
    write_csv(csv, header, rows);

    std::vector<const MethodRun*> runs;
    for (const auto& per_method : results.runs)
        for (const auto& r : per_method) runs.push_back(&r);
    json body = manifest(config, results, cache, csv, "comparison", header, runs);
    body["reference"] = config.methods[ref].text();
    const std::size_t warnings = body["warnings"].size();
    write_json(manifest_path(csv), body);
    return {csv, manifest_path(csv), warnings};
}

} // namespace qce::harness
