#include "qce/harness/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "qce/analytics.hpp"
#include "qce/moment_integrator.hpp"

namespace qce::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// What each configured observable needs from a state.
struct Observable {
    enum class Kind { number, g2, word } kind;
    ModeIndex mode;
    Monomial monomial; // word observables
};

std::vector<Observable> resolve(const std::vector<std::string>& names) {
    std::vector<Observable> out;
    for (const auto& name : names) {
        if (name.rfind("n_", 0) == 0) out.push_back({Observable::Kind::number, parse_mode(name.substr(2)), {}});
        else if (name.rfind("g2_", 0) == 0) out.push_back({Observable::Kind::g2, parse_mode(name.substr(3)), {}});
        else out.push_back({Observable::Kind::word, {}, parse_word(name).terms().begin()->first});
    }
    return out;
}

Monomial pair_number(ModeIndex mode) {
    std::vector<unsigned> powers(2 * (mode.id + 1), 0);
    powers[2 * mode.id] = 2;
    powers[2 * mode.id + 1] = 2;
    return Monomial::from_powers(powers);
}

std::size_t column_count(const std::vector<Observable>& obs) {
    std::size_t n = 0;
    for (const auto& o : obs) n += o.kind == Observable::Kind::word ? 2 : 1;
    return n;
}

// Fills one row from a moment lookup; returns false where g2 was undefined.
template <class Lookup>
bool fill_row(const std::vector<Observable>& obs, Lookup&& moment, std::vector<double>& row, double& worst_residue) {
    bool defined = true;
    row.clear();
    for (const auto& o : obs) {
        switch (o.kind) {
        case Observable::Kind::number: row.push_back(moment(Monomial::number(o.mode)).real()); break;
        case Observable::Kind::g2:
            try {
                const G2Estimate e = g2_from_values(moment(Monomial::number(o.mode)), moment(pair_number(o.mode)));
                row.push_back(e.value);
                worst_residue = std::max(worst_residue, std::abs(e.imaginary_residue));
            } catch (const std::domain_error&) {
                row.push_back(kNaN);
                defined = false;
            }
            break;
        case Observable::Kind::word: {
            const Complex v = moment(o.monomial);
            row.push_back(v.real());
            row.push_back(v.imag());
            break;
        }
        }
    }
    return defined;
}

// Exact (hex-float) coefficients, so nearby sweep points never share an entry.
std::string model_key(const ModelSpec& model) {
    std::ostringstream key;
    key << std::hexfloat << model.mode_count();
    for (const auto& [m, c] : model.hamiltonian().terms()) key << '|' << m.to_string() << ':' << c.real() << ',' << c.imag();
    for (const auto& d : model.dissipators()) key << "|L" << d.jump.to_string() << ':' << d.rate;
    return key.str();
}

void run_moments(const RunConfig& config, const MethodSpec& method, const ModelSpec& model, SystemCache& cache,
                 bool dynamics, const std::vector<Observable>& obs, MethodRun& out) {
    const auto system = cache.get(model, method.order);
    out.equations = system->size();
    MomentState start = vacuum_state(system->basis());
    if (config.seed > 0.0) {
        start.values(static_cast<Eigen::Index>(system->basis().locate(Monomial::annihilation(kModeA)).position)) =
            Complex(0.0, config.seed);
    }
    const Trajectory traj = integrate(*system, start, config.horizon, config.tolerances, dynamics ? config.samples : 2);
    out.diverged = traj.divergence.diverged;
    out.divergence_time = traj.divergence.time;
    out.divergence_reason = traj.divergence.reason;
    double residue = 0.0;
    bool g2_defined = true;
    const std::size_t first = dynamics ? 0 : traj.states.size() - 1;
    for (std::size_t s = first; s < traj.states.size(); ++s) {
        std::vector<double> row;
        const auto view = traj.states[s].view();
        g2_defined = fill_row(obs, [&](const Monomial& m) { return system->moment(view, m); }, row, residue);
        out.times.push_back(traj.times[s]);
        out.rows.push_back(std::move(row));
    }
    if (out.diverged) {
        out.warnings.push_back("integration diverged at t=" + std::to_string(out.divergence_time) + ": " + out.divergence_reason);
        if (!dynamics) {
            out.times = {config.horizon};
            out.rows = {std::vector<double>(column_count(obs), kNaN)};
        }
        return;
    }
    out.residual = rhs_residual(*system, traj.final_state());
    if (!g2_defined) out.warnings.push_back("g2 undefined at the horizon: mode population below the vacuum floor");
    if (residue > 1e-6) out.warnings.push_back("g2 imaginary residue up to " + std::to_string(residue));
}

void run_fst(const RunConfig& config, const MethodSpec& method, const ModelSpec& model, bool dynamics,
             const std::vector<Observable>& obs, MethodRun& out) {
    FstOptions options;
    options.tolerances = config.fst.tolerances;
    options.samples = dynamics ? config.samples : 2;
    std::vector<Monomial> tracked;
    auto track = [&](const Monomial& m) {
        if (std::find(tracked.begin(), tracked.end(), m) == tracked.end()) tracked.push_back(m);
    };
    for (const auto& o : obs) {
        if (o.kind == Observable::Kind::word) {
            track(o.monomial);
        } else {
            track(Monomial::number(o.mode));
            if (o.kind == Observable::Kind::g2) track(pair_number(o.mode));
        }
    }
    options.tracked = tracked;

    const FockDims start = method.dims ? FockDims(*method.dims) : default_dims(config.model.params.drive);
    FstTrajectory traj = [&] {
        if (!method.ladder) return evolve(model, vacuum_density(start), config.horizon, options);
        ConvergedFst run = evolve_converged(model, start, config.horizon, options, config.fst.ladder_rel_tol,
                                            config.fst.max_doublings);
        out.unconverged = !run.converged;
        out.ladder = run.ladder;
        if (out.unconverged) out.warnings.push_back("FST doubling ladder did not reach the requested relative change");
        return std::move(run.trajectory);
    }();
    const FockDims& dims = traj.final_state.dims;
    out.equations = dims.total();
    out.fock_dims = dims.to_string();
    out.fst = traj.diagnostics;
    out.leakage = traj.diagnostics.leakage_warning;
    out.diverged = traj.divergence.diverged;
    out.divergence_time = traj.divergence.time;
    out.divergence_reason = traj.divergence.reason;
    if (out.leakage) {
        out.warnings.push_back("top Fock level population " + std::to_string(traj.diagnostics.max_top_population) +
                               " exceeds the leakage threshold at " + out.fock_dims);
    }
    if (traj.diagnostics.max_trace_error > 1e-8) out.warnings.push_back("trace drift " + std::to_string(traj.diagnostics.max_trace_error));
    if (traj.diagnostics.min_eigenvalue < -1e-8) {
        out.warnings.push_back("negative density-matrix eigenvalue " + std::to_string(traj.diagnostics.min_eigenvalue));
    }
    double residue = 0.0;
    bool g2_defined = true;
    const std::size_t first = dynamics ? 0 : traj.values.size() - 1;
    for (std::size_t s = first; s < traj.values.size(); ++s) {
        const auto& values = traj.values[s];
        auto lookup = [&](const Monomial& m) {
            const auto it = std::find(tracked.begin(), tracked.end(), m);
            return values[static_cast<std::size_t>(it - tracked.begin())];
        };
        std::vector<double> row;
        g2_defined = fill_row(obs, lookup, row, residue);
        out.times.push_back(traj.times[s]);
        out.rows.push_back(std::move(row));
    }
    if (out.diverged) {
        out.warnings.push_back("integration diverged at t=" + std::to_string(out.divergence_time));
        if (!dynamics) out.rows = {std::vector<double>(column_count(obs), kNaN)};
    }
    if (!g2_defined) out.warnings.push_back("g2 undefined at the horizon: mode population below the vacuum floor");
}

} // namespace

std::vector<Point> sweep_points(const RunConfig& config) {
    std::vector<Point> points{Point{}};
    for (const auto& axis : config.sweep) {
        std::vector<Point> next;
        for (const auto& p : points) {
            for (double v : axis.values) {
                Point q = p;
                q.axes.emplace_back(axis.parameter, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

ModelConfig model_at(const ModelConfig& base, const Point& point) {
    ModelConfig m = base;
    for (const auto& [name, value] : point.axes) {
        if (name == "g") m.params.g = value;
        else if (name == "E") m.params.drive = value;
    }
    return m;
}

std::vector<std::string> observable_columns(const RunConfig& config) {
    std::vector<std::string> cols;
    for (const auto& o : config.observables) {
        if (o.rfind("n_", 0) == 0 || o.rfind("g2_", 0) == 0) {
            cols.push_back(o);
        } else {
            const std::string label = cluster_label(parse_word(o).terms().begin()->first);
            cols.push_back("re" + label);
            cols.push_back("im" + label);
        }
    }
    return cols;
}

std::shared_ptr<const MomentODESystem> SystemCache::get(const ModelSpec& model, unsigned order) {
    auto key = std::make_pair(model_key(model), order);
    {
        std::lock_guard lock(mutex_);
        if (auto it = systems_.find(key); it != systems_.end()) {
            ++hits_;
            return it->second;
        }
    }
    auto built = std::make_shared<const MomentODESystem>(build_system(model, order));
    std::lock_guard lock(mutex_);
    return systems_.emplace(std::move(key), std::move(built)).first->second;
}

std::size_t SystemCache::size() const {
    std::lock_guard lock(mutex_);
    return systems_.size();
}

std::size_t SystemCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::vector<std::string> MethodRun::flags() const {
    std::vector<std::string> out;
    if (failed) out.push_back("error");
    if (diverged) out.push_back("diverged");
    if (leakage) out.push_back("leakage");
    if (unconverged) out.push_back("unconverged");
    return out;
}

MethodRun run_method(const RunConfig& config, const MethodSpec& method, const Point& point, SystemCache& cache,
                     bool dynamics) {
    MethodRun out;
    out.method = method;
    out.point = point;
    const auto obs = resolve(config.observables);
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig local = config;
    local.model = model_at(config.model, point);
    try {
        const ModelSpec model = make_model(local.model);
        if (method.kind == MethodKind::fst) run_fst(local, method, model, dynamics, obs, out);
        else run_moments(local, method, model, cache, dynamics, obs, out);
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
        out.warnings.push_back(std::string("run failed: ") + e.what());
        out.times = {config.horizon};
        out.rows = {std::vector<double>(column_count(obs), kNaN)};
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

RunResults execute(const RunConfig& config, SystemCache& cache, std::size_t threads) {
    RunResults results;
    results.points = sweep_points(config);
    results.columns = observable_columns(config);
    results.dynamics = !config.is_sweep();
    const std::size_t n_points = results.points.size();
    const std::size_t n_tasks = n_points * config.methods.size();
    results.runs.assign(config.methods.size(), std::vector<MethodRun>(n_points));

    if (threads == 0) threads = config.threads;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(n_tasks, 1));

    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < n_tasks; task = next++) {
            const std::size_t m = task / n_points, p = task % n_points;
            results.runs[m][p] = run_method(config, config.methods[m], results.points[p], cache, results.dynamics);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    results.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return results;
}

} // namespace qce::harness
