#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qce/cluster_engine.hpp"
#include "qce/fst_reference.hpp"
#include "qce/harness/config.hpp"

namespace qce::harness {

/// Values of the sweep axes at one grid point, in config order.
struct Point {
    std::vector<std::pair<std::string, double>> axes;
};

/// Cartesian product of the sweep axes (first axis slowest); one empty point without a sweep.
std::vector<Point> sweep_points(const RunConfig& config);

/// The model parameters with the point's axis values applied.
ModelConfig model_at(const ModelConfig& base, const Point& point);

/// CSV column names of the configured observables: n_a, g2_a, and re<...>/im<...> pairs for words.
std::vector<std::string> observable_columns(const RunConfig& config);

/// Moment systems keyed by (model, order). Thread safe; generation happens
/// outside the lock, so two threads may build the same entry once each.
class SystemCache {
public:
    std::shared_ptr<const MomentODESystem> get(const ModelSpec& model, unsigned order);
    std::size_t size() const;
    std::size_t hits() const;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, unsigned>, std::shared_ptr<const MomentODESystem>> systems_;
    std::size_t hits_ = 0;
};

/// One method at one point.
struct MethodRun {
    MethodSpec method;
    Point point;
    std::vector<double> times;
    std::vector<std::vector<double>> rows; // rows[sample][column]

    double wall_seconds = 0.0;
    std::size_t equations = 0; // clusters, or Fock states for FST
    std::string fock_dims;     // FST only
    bool diverged = false;
    double divergence_time = 0.0;
    std::string divergence_reason;
    bool leakage = false;
    bool unconverged = false; // fst:auto ladder did not settle
    bool failed = false;
    std::string error;
    double residual = 0.0; // RMS of the moment RHS at the final state
    std::optional<FstDiagnostics> fst;
    std::vector<ConvergenceStep> ladder;
    std::vector<std::string> warnings;

    /// Short tags for the CSV flag column; empty when the point is clean.
    std::vector<std::string> flags() const;
};

/// Runs one method at one point. With `dynamics` the configured number of
/// samples is recorded; otherwise only the state at the horizon. Errors are
/// captured in the result, never thrown.
MethodRun run_method(const RunConfig& config, const MethodSpec& method, const Point& point, SystemCache& cache,
                     bool dynamics);

struct RunResults {
    std::vector<Point> points;
    std::vector<std::string> columns;
    std::vector<std::vector<MethodRun>> runs; // runs[method][point]
    bool dynamics = false;
    double wall_seconds = 0.0;
};

/// Every method at every point on a pool of `threads` workers (0 = config,
/// then hardware concurrency). Each task integrates from its own initial
/// state; results do not depend on the worker count.
RunResults execute(const RunConfig& config, SystemCache& cache, std::size_t threads = 0);

} // namespace qce::harness
