#include "qce/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace qce::harness {

ConfigError::ConfigError(const std::string& where, int line, int column, const std::string& message)
    : std::runtime_error(where + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line), column_(column) {}

ConfigError::ConfigError(const std::string& message) : std::runtime_error(message) {}

// --- models and methods -------------------------------------------------------

ModelSpec make_model(const ModelConfig& config) {
    switch (config.kind) {
    case ModelKind::shg: return shg_model(config.params);
    case ModelKind::opo: return opo_model(config.params);
    case ModelKind::custom: break;
    }
    OperatorPoly h;
    for (const auto& term : config.hamiltonian) h += term.coefficient * parse_word(term.word);
    std::vector<Dissipator> dissipators;
    for (const auto& d : config.dissipators) {
        const OperatorPoly jump = parse_word(d.jump);
        if (jump.size() != 1 || jump.terms().begin()->second != Complex(1.0)) {
            throw std::invalid_argument("jump operator '" + d.jump + "' is not a single normal-ordered monomial");
        }
        dissipators.push_back({d.rate, jump.terms().begin()->first});
    }
    return ModelSpec(config.modes, std::move(h), std::move(dissipators), "custom");
}

std::string MethodSpec::text() const {
    switch (kind) {
    case MethodKind::mfa: return "mfa";
    case MethodKind::qce: return "qce:" + std::to_string(order);
    case MethodKind::fst: break;
    }
    if (ladder) return "fst:auto";
    if (!dims) return "fst";
    std::string out = "fst:";
    for (std::size_t j = 0; j < dims->size(); ++j) out += (j ? "x" : "") + std::to_string((*dims)[j]);
    return out;
}

std::string MethodSpec::slug() const {
    std::string s = text();
    if (kind == MethodKind::qce) return "qce" + std::to_string(order);
    std::replace(s.begin(), s.end(), ':', '_');
    return s;
}

MethodSpec parse_method(const std::string& text) {
    MethodSpec m;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto bad = [&](const std::string& why) { return std::invalid_argument("method '" + text + "': " + why); };
    auto whole_number = [](const std::string& s) {
        return !s.empty() && s.size() < 6 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    if (head == "mfa") {
        if (colon != std::string::npos) throw bad("mfa takes no argument");
        return m;
    }
    if (head == "qce") {
        if (!whole_number(arg)) throw bad("expected qce:<order>");
        m.kind = MethodKind::qce;
        m.order = static_cast<unsigned>(std::stoul(arg));
        if (m.order < 1 || m.order > 12) throw bad("order must be between 1 and 12");
        return m;
    }
    if (head == "fst") {
        m.kind = MethodKind::fst;
        if (colon == std::string::npos) return m;
        if (arg == "auto") {
            m.ladder = true;
            return m;
        }
        std::vector<int> dims;
        std::stringstream in(arg);
        std::string part;
        while (std::getline(in, part, 'x')) {
            if (!whole_number(part)) throw bad("expected fst:<n>x<n>...");
            dims.push_back(std::stoi(part));
            if (dims.back() < 2) throw bad("truncation dimensions must be >= 2");
        }
        if (dims.empty() || arg.back() == 'x') throw bad("expected fst:<n>x<n>...");
        m.dims = std::move(dims);
        return m;
    }
    throw bad("unknown method (mfa, qce:M, fst, fst:auto, fst:NxM)");
}

// --- YAML reading -------------------------------------------------------------

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
        const YAML::Mark mark = node.Mark();
        if (mark.line < 0) throw ConfigError(source_ + ": " + message);
        throw ConfigError(source_, mark.line + 1, mark.column + 1, message);
    }

    void require_map(const YAML::Node& node, const std::string& what) const {
        if (!node.IsMap()) fail(node, what + " must be a mapping");
    }

    void allow_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& what) const {
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) {
                std::string list;
                for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
                fail(kv.first, "unknown key '" + key + "' in " + what + " (expected one of: " + list + ")");
            }
        }
    }

    double number(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be a number");
        try {
            return node.as<double>();
        } catch (const YAML::Exception&) {
            fail(node, what + " must be a number, got '" + node.Scalar() + "'");
        }
    }

    long integer(const YAML::Node& node, const std::string& what, long lo) const {
        if (!node.IsScalar()) fail(node, what + " must be an integer");
        long v = 0;
        try {
            v = node.as<long>();
        } catch (const YAML::Exception&) {
            fail(node, what + " must be an integer, got '" + node.Scalar() + "'");
        }
        if (v < lo) fail(node, what + " must be >= " + std::to_string(lo));
        return v;
    }

    std::string text(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be a string");
        return node.Scalar();
    }

    Complex coefficient(const YAML::Node& node) const {
        if (node.IsSequence()) {
            if (node.size() != 2) fail(node, "complex coefficient must be [re, im]");
            return {number(node[0], "real part"), number(node[1], "imaginary part")};
        }
        return number(node, "coefficient");
    }

    /// A list of numbers, or {from, to, count}; must be strictly increasing.
    std::vector<double> grid(const YAML::Node& node, const std::string& what) const {
        std::vector<double> values;
        if (node.IsSequence()) {
            for (const auto& v : node) values.push_back(number(v, what + " entry"));
        } else if (node.IsMap()) {
            allow_keys(node, {"from", "to", "count"}, what);
            for (const char* key : {"from", "to", "count"}) {
                if (!node[key]) fail(node, what + " range needs 'from', 'to' and 'count'");
            }
            const double from = number(node["from"], "from");
            const double to = number(node["to"], "to");
            const long count = integer(node["count"], "count", 1);
            if (count == 1) {
                values.push_back(from);
            } else {
                for (long k = 0; k < count; ++k) {
                    values.push_back(std::lerp(from, to, static_cast<double>(k) / static_cast<double>(count - 1)));
                }
            }
        } else {
            fail(node, what + " must be a list or a {from, to, count} range");
        }
        for (std::size_t k = 1; k < values.size(); ++k) {
            if (!(values[k] > values[k - 1])) fail(node, what + " must be strictly increasing");
        }
        return values;
    }

    Tolerances tolerances(const YAML::Node& node, Tolerances defaults, const std::string& what) const {
        require_map(node, what);
        if (node["rel"]) defaults.rel = number(node["rel"], what + ".rel");
        if (node["abs"]) defaults.abs = number(node["abs"], what + ".abs");
        if (!(defaults.rel > 0.0) || !(defaults.abs > 0.0)) fail(node, what + " must be positive");
        return defaults;
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

ModelConfig read_model(const Reader& r, const YAML::Node& node) {
    r.require_map(node, "model");
    r.allow_keys(node, {"kind", "g", "E", "kappa_a", "kappa_b", "delta_a", "delta_b", "modes", "hamiltonian", "dissipators"},
                 "model");
    if (!node["kind"]) r.fail(node, "model needs 'kind' (shg, opo or custom)");
    ModelConfig m;
    const std::string kind = r.text(node["kind"], "model.kind");
    if (kind == "shg") m.kind = ModelKind::shg;
    else if (kind == "opo") m.kind = ModelKind::opo;
    else if (kind == "custom") m.kind = ModelKind::custom;
    else r.fail(node["kind"], "model.kind must be shg, opo or custom");

    if (m.kind != ModelKind::custom) {
        for (const char* key : {"modes", "hamiltonian", "dissipators"}) {
            if (node[key]) r.fail(node[key], std::string("'") + key + "' is only valid for custom models");
        }
        auto& p = m.params;
        if (node["g"]) p.g = r.number(node["g"], "g");
        if (node["E"]) p.drive = r.number(node["E"], "E");
        if (node["kappa_a"]) p.kappa_a = r.number(node["kappa_a"], "kappa_a");
        if (node["kappa_b"]) p.kappa_b = r.number(node["kappa_b"], "kappa_b");
        if (node["delta_a"]) p.detuning_a = r.number(node["delta_a"], "delta_a");
        if (node["delta_b"]) p.detuning_b = r.number(node["delta_b"], "delta_b");
        if (!(p.kappa_a > 0.0)) r.fail(node["kappa_a"], "kappa_a must be positive");
        if (!(p.kappa_b > 0.0)) r.fail(node["kappa_b"], "kappa_b must be positive");
        return m;
    }

    for (const char* key : {"g", "E", "kappa_a", "kappa_b", "delta_a", "delta_b"}) {
        if (node[key]) r.fail(node[key], std::string("'") + key + "' is not used by custom models; write the terms out");
    }
    if (!node["modes"]) r.fail(node, "custom model needs 'modes'");
    m.modes = static_cast<std::size_t>(r.integer(node["modes"], "modes", 1));
    if (node["hamiltonian"]) {
        const auto& h = node["hamiltonian"];
        if (!h.IsSequence()) r.fail(h, "hamiltonian must be a list of {coeff, word} terms");
        for (const auto& term : h) {
            r.require_map(term, "hamiltonian term");
            r.allow_keys(term, {"coeff", "word"}, "hamiltonian term");
            if (!term["word"]) r.fail(term, "hamiltonian term needs 'word'");
            HamiltonianTerm t;
            t.word = r.text(term["word"], "word");
            if (term["coeff"]) t.coefficient = r.coefficient(term["coeff"]);
            try {
                (void)parse_word(t.word);
            } catch (const std::invalid_argument& e) {
                r.fail(term["word"], e.what());
            }
            m.hamiltonian.push_back(std::move(t));
        }
    }
    if (node["dissipators"]) {
        const auto& d = node["dissipators"];
        if (!d.IsSequence()) r.fail(d, "dissipators must be a list of {rate, jump} entries");
        for (const auto& entry : d) {
            r.require_map(entry, "dissipator");
            r.allow_keys(entry, {"rate", "jump"}, "dissipator");
            if (!entry["rate"] || !entry["jump"]) r.fail(entry, "dissipator needs 'rate' and 'jump'");
            m.dissipators.push_back({r.number(entry["rate"], "rate"), r.text(entry["jump"], "jump")});
        }
    }
    try {
        (void)make_model(m);
    } catch (const std::invalid_argument& e) {
        r.fail(node, std::string("invalid custom model: ") + e.what());
    }
    return m;
}

BenchmarkConfig read_benchmark(const Reader& r, const YAML::Node& node) {
    r.require_map(node, "benchmark");
    r.allow_keys(node,
                 {"max_modes", "orders", "fst_truncations", "E", "g", "timing_orders", "repeats", "fst_max_E", "time_budget"},
                 "benchmark");
    BenchmarkConfig b;
    auto unsigned_list = [&](const YAML::Node& n, const std::string& what, long lo) {
        if (!n.IsSequence() || n.size() == 0) r.fail(n, what + " must be a non-empty list");
        std::vector<long> out;
        for (const auto& v : n) out.push_back(r.integer(v, what + " entry", lo));
        return out;
    };
    if (node["max_modes"]) b.max_modes = static_cast<std::size_t>(r.integer(node["max_modes"], "max_modes", 1));
    if (node["orders"]) {
        b.orders.clear();
        for (long v : unsigned_list(node["orders"], "orders", 1)) b.orders.push_back(static_cast<unsigned>(v));
    }
    if (node["fst_truncations"]) {
        b.fst_truncations.clear();
        for (long v : unsigned_list(node["fst_truncations"], "fst_truncations", 2)) b.fst_truncations.push_back(static_cast<int>(v));
    }
    if (node["timing_orders"]) {
        b.timing_orders.clear();
        for (long v : unsigned_list(node["timing_orders"], "timing_orders", 1)) b.timing_orders.push_back(static_cast<unsigned>(v));
    }
    if (node["E"]) b.drives = r.grid(node["E"], "benchmark.E");
    if (node["g"]) b.g = r.number(node["g"], "benchmark.g");
    if (node["repeats"]) b.repeats = static_cast<std::size_t>(r.integer(node["repeats"], "repeats", 1));
    if (node["fst_max_E"]) b.fst_max_drive = r.number(node["fst_max_E"], "fst_max_E");
    if (node["time_budget"]) b.time_budget = r.number(node["time_budget"], "time_budget");
    return b;
}

using FieldError = std::function<ConfigError(const std::string& field, const std::string& message)>;

bool valid_observable(const std::string& name, std::size_t modes, std::string& why) {
    for (const char* prefix : {"n_", "g2_"}) {
        const std::string p(prefix);
        if (name.rfind(p, 0) == 0) {
            try {
                if (parse_mode(name.substr(p.size())).id < modes) return true;
                why = "mode outside the model";
            } catch (const std::invalid_argument& e) {
                why = e.what();
            }
            return false;
        }
    }
    try {
        const OperatorPoly w = parse_word(name);
        if (w.size() != 1 || w.terms().begin()->second != Complex(1.0) || w.terms().begin()->first.is_identity()) {
            why = "observable words must be a single normal-ordered monomial";
            return false;
        }
        if (w.mode_span() > modes) {
            why = "mode outside the model";
            return false;
        }
        return true;
    } catch (const std::invalid_argument& e) {
        why = e.what();
        return false;
    }
}

void check(const RunConfig& c, const FieldError& error) {
    const std::size_t modes = c.model.kind == ModelKind::custom ? c.model.modes : 2;
    if (c.methods.empty() && !c.benchmark) throw error("methods", "at least one method is required");
    if (c.mode == RunMode::compare && c.methods.size() < 2) throw error("methods", "compare needs at least two methods");
    if (!(c.horizon > 0.0)) throw error("horizon", "horizon must be positive");
    if (c.samples < 2) throw error("samples", "samples must be >= 2");
    if (c.seed < 0.0) throw error("seed", "seed must be non-negative");
    bool wants_g2 = false;
    for (const auto& o : c.observables) {
        std::string why;
        if (!valid_observable(o, modes, why)) throw error("observables", "bad observable '" + o + "': " + why);
        wants_g2 = wants_g2 || o.rfind("g2_", 0) == 0;
    }
    for (const auto& m : c.methods) {
        if (wants_g2 && !m.supports_g2()) {
            throw error("methods", "method " + m.text() + " cannot provide g2 (needs qce:M with M >= 4, or fst)");
        }
        if (m.kind == MethodKind::fst && m.dims && m.dims->size() != modes) {
            throw error("methods", "method " + m.text() + " gives " + std::to_string(m.dims->size()) +
                                       " truncation sizes for a " + std::to_string(modes) + "-mode model");
        }
        if (m.kind == MethodKind::fst && !m.dims && c.model.kind == ModelKind::custom) {
            throw error("methods", "custom models need explicit FST dims (fst:NxM...)");
        }
    }
    if (c.seed > 0.0 && c.model.kind == ModelKind::custom) throw error("seed", "seed is only defined for shg/opo");
    std::set<std::string> axes;
    for (const auto& axis : c.sweep) {
        if (c.model.kind == ModelKind::custom) throw error("sweep", "sweeps need an shg or opo model");
        if (axis.parameter != "g" && axis.parameter != "E") throw error("sweep", "sweep axes are g and E");
        if (!axes.insert(axis.parameter).second) throw error("sweep", "duplicate sweep axis " + axis.parameter);
        for (std::size_t k = 1; k < axis.values.size(); ++k) {
            if (!(axis.values[k] > axis.values[k - 1])) throw error("sweep", "sweep grids must be strictly increasing");
        }
    }
    if (!c.reference.empty()) {
        const bool found = std::any_of(c.methods.begin(), c.methods.end(), [&](const MethodSpec& m) { return m.text() == c.reference; });
        if (!found) throw error("reference", "reference '" + c.reference + "' is not among the methods");
    }
    try {
        (void)make_model(c.model);
    } catch (const std::invalid_argument& e) {
        throw error("model", e.what());
    }
}

} // namespace

void validate(const RunConfig& config) {
    check(config, [](const std::string& field, const std::string& message) { return ConfigError(field + ": " + message); });
}

RunConfig parse_config(const std::string& text, const std::string& source_name) {
    const Reader r(source_name);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source_name, e.mark.line + 1, e.mark.column + 1, e.msg);
    }
    if (!root.IsMap()) r.fail(root, "configuration must be a mapping");
    r.allow_keys(root,
                 {"name", "mode", "model", "methods", "horizon", "samples", "tolerances", "fst", "observables", "sweep",
                  "seed", "threads", "output", "reference", "benchmark"},
                 "configuration");

    RunConfig c;
    if (root["name"]) c.name = r.text(root["name"], "name");
    if (root["mode"]) {
        const std::string mode = r.text(root["mode"], "mode");
        if (mode == "run") c.mode = RunMode::run;
        else if (mode == "compare") c.mode = RunMode::compare;
        else r.fail(root["mode"], "mode must be run or compare");
    }
    if (root["model"]) c.model = read_model(r, root["model"]);
    else if (!root["benchmark"]) r.fail(root, "configuration needs a 'model'");

    if (root["methods"]) {
        const auto& ms = root["methods"];
        if (!ms.IsSequence()) r.fail(ms, "methods must be a list such as [mfa, \"qce:4\", fst]");
        for (const auto& m : ms) {
            try {
                c.methods.push_back(parse_method(r.text(m, "method")));
            } catch (const std::invalid_argument& e) {
                r.fail(m, e.what());
            }
        }
    }
    c.horizon = 10.0 / c.model.params.kappa_a;
    if (root["horizon"]) c.horizon = r.number(root["horizon"], "horizon");
    if (root["samples"]) c.samples = static_cast<std::size_t>(r.integer(root["samples"], "samples", 2));
    if (root["tolerances"]) c.tolerances = r.tolerances(root["tolerances"], c.tolerances, "tolerances");
    if (root["fst"]) {
        const auto& f = root["fst"];
        r.require_map(f, "fst");
        r.allow_keys(f, {"rel", "abs", "ladder_rel_tol", "max_doublings"}, "fst");
        YAML::Node tol(YAML::NodeType::Map);
        if (f["rel"]) tol["rel"] = f["rel"];
        if (f["abs"]) tol["abs"] = f["abs"];
        c.fst.tolerances = r.tolerances(tol, c.fst.tolerances, "fst tolerances");
        if (f["ladder_rel_tol"]) c.fst.ladder_rel_tol = r.number(f["ladder_rel_tol"], "ladder_rel_tol");
        if (f["max_doublings"]) c.fst.max_doublings = static_cast<std::size_t>(r.integer(f["max_doublings"], "max_doublings", 0));
    }
    if (root["observables"]) {
        const auto& obs = root["observables"];
        if (!obs.IsSequence() || obs.size() == 0) r.fail(obs, "observables must be a non-empty list");
        c.observables.clear();
        for (const auto& o : obs) c.observables.push_back(r.text(o, "observable"));
    } else if (c.model.kind == ModelKind::custom) {
        c.observables.clear();
        for (std::size_t j = 0; j < c.model.modes; ++j) c.observables.push_back("n_" + mode_name(ModeIndex{static_cast<std::uint32_t>(j)}));
    }
    if (root["sweep"]) {
        const auto& s = root["sweep"];
        r.require_map(s, "sweep");
        r.allow_keys(s, {"g", "E"}, "sweep");
        for (const char* axis : {"g", "E"}) {
            if (!s[axis]) continue;
            auto values = r.grid(s[axis], std::string("sweep.") + axis);
            if (!values.empty()) c.sweep.push_back({axis, std::move(values)});
        }
    }
    if (root["seed"]) c.seed = r.number(root["seed"], "seed");
    if (root["threads"]) c.threads = static_cast<std::size_t>(r.integer(root["threads"], "threads", 0));
    if (root["output"]) c.output = r.text(root["output"], "output");
    if (root["reference"]) {
        try {
            c.reference = parse_method(r.text(root["reference"], "reference")).text();
        } catch (const std::invalid_argument& e) {
            r.fail(root["reference"], e.what());
        }
    }
    if (root["benchmark"]) c.benchmark = read_benchmark(r, root["benchmark"]);

    check(c, [&](const std::string& field, const std::string& message) {
        const YAML::Node node = root[field] ? root[field] : root;
        const YAML::Mark mark = node.Mark();
        return ConfigError(source_name, mark.line + 1, mark.column + 1, message);
    });
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig c = parse_config(buffer.str(), path.string());
    if (c.name == "run" && !YAML::Load(buffer.str())["name"]) c.name = path.stem().string();
    return c;
}

} // namespace qce::harness
