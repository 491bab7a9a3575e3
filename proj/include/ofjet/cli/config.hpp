#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "ofjet/gaussian_model.hpp"
#include "ofjet/report.hpp"

namespace ofjet::cli {

inline const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names = {"simulate", "check-derivs", "forgetting", "ergodicity",
                                                   "loglik",   "rml",          "assumptions"};
    return names;
}

/// Invalid configuration; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line) : std::runtime_error(format(what, line)), line_(line) {}
    int line() const { return line_; }

private:
    static std::string format(const std::string& what, int line)
    {
        return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
    }
    int line_;
};

/// Parameters of the experiment block; each experiment reads the fields it needs.
struct ExperimentConfig {
    int n = 10;                  ///< observations per trajectory (simulate, check-derivs, loglik)
    int n_max = 60;              ///< horizon (forgetting, ergodicity)
    int replicas = 1000;
    int theta_count = 10;        ///< random parameters when `thetas` is empty
    double theta_margin = 0.1;
    std::vector<std::vector<double>> thetas;
    int pairs = 5;
    int fit_from = -1;
    double fd_h = 1e-3;
    int fd_levels = 2;
    double rel_tol = 1e-4;
    double abs_floor = 1e-6;
    double max_rate = 0.99;
    double min_r_squared = 0.9;
    std::string functional = "posterior_mean";
    int functional_slot = 0;
    std::vector<int> initial_points;  ///< grid indices of the initial states (ergodicity)
    int n_early = 5;
    int n_late = 40;
    double spread_factor = 5.0;
    double se_band = 3.0;
    int rate_n = 200;            ///< loglik rate horizon
    int rate_replicas = 100;
    double rml_a = 2.0;
    double rml_b = 100.0;
    int rml_steps = 2000;
    std::vector<double> rml_init;
    int rml_window = 500;
    int theta_samples = 3;       ///< assumptions
    double y_lower = 100.0;
    double y_upper = 10000.0;
    int y_count = 12;
    std::string y_spacing = "log";
    double psi_exponent = 2.0;
    double psi_tolerance = 0.2;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct RunConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    GaussianModelConfig model;
    std::vector<double> theta;
    std::vector<double> truth;  ///< data-generating parameter; empty means theta
    std::string initial = "uniform";
    ExperimentConfig run;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T scalar(const YAML::Node& n, const std::string& key)
{
    if (!n.IsScalar()) {
        throw ConfigError("'" + key + "' must be a scalar", line_of(n));
    }
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("'" + key + "' has the wrong type: '" + n.Scalar() + "'", line_of(n));
    }
}

template <class T>
std::vector<T> sequence(const YAML::Node& n, const std::string& key)
{
    if (!n.IsSequence()) {
        throw ConfigError("'" + key + "' must be a list", line_of(n));
    }
    std::vector<T> out;
    for (const auto& item : n) {
        out.push_back(scalar<T>(item, key));
    }
    return out;
}

inline void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where)
{
    if (!map.IsMap()) {
        throw ConfigError("'" + where + "' must be a mapping", line_of(map));
    }
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
        }
    }
}

template <class T>
void read(const YAML::Node& map, const char* key, T& out)
{
    if (const YAML::Node n = map[key]) {
        out = scalar<T>(n, key);
    }
}

template <class T>
void read(const YAML::Node& map, const char* key, std::vector<T>& out)
{
    if (const YAML::Node n = map[key]) {
        out = sequence<T>(n, key);
    }
}

inline Box read_box(const YAML::Node& n, const std::string& key,
                    const std::set<std::string>& allowed = {"lower", "upper"})
{
    check_keys(n, allowed, key);
    Box b;
    if (!n["lower"] || !n["upper"]) {
        throw ConfigError("'" + key + "' needs 'lower' and 'upper'", line_of(n));
    }
    b.lower = sequence<double>(n["lower"], key + ".lower");
    b.upper = sequence<double>(n["upper"], key + ".upper");
    if (b.lower.size() != b.upper.size()) {
        throw ConfigError("'" + key + "' bounds differ in length", line_of(n));
    }
    for (std::size_t i = 0; i < b.lower.size(); ++i) {
        if (!(b.upper[i] > b.lower[i])) {
            throw ConfigError("'" + key + "' is empty along axis " + std::to_string(i), line_of(n));
        }
    }
    return b;
}

inline std::vector<LinearTerm> read_terms(const YAML::Node& n, const std::string& key)
{
    if (!n.IsSequence()) {
        throw ConfigError("'" + key + "' must be a list of terms", line_of(n));
    }
    std::vector<LinearTerm> out;
    for (const auto& item : n) {
        check_keys(item, {"parameter", "output", "input", "basis", "coefficient"}, key);
        LinearTerm t;
        read(item, "parameter", t.parameter);
        read(item, "output", t.output);
        read(item, "input", t.input);
        read(item, "coefficient", t.coefficient);
        if (const YAML::Node b = item["basis"]) {
            const auto basis = parse_basis(scalar<std::string>(b, "basis"));
            if (!basis) {
                throw ConfigError("unknown basis '" + b.Scalar() + "'", line_of(b));
            }
            t.basis = *basis;
        }
        out.push_back(t);
    }
    return out;
}

inline GaussianModelConfig model_preset(const std::string& name, int line)
{
    if (name == "tanh_linear") {
        return tanh_linear_config();
    }
    if (name == "linear_gaussian") {
        return linear_gaussian_config();
    }
    if (name == "tanh_linear_2d") {
        return tanh_linear_2d_config();
    }
    if (name == "custom") {
        GaussianModelConfig c = tanh_linear_config();
        c.name = "custom";
        return c;
    }
    throw ConfigError("unknown model '" + name + "'", line);
}

inline GaussianModelConfig read_model(const YAML::Node& n, const YAML::Node& grid, int order)
{
    std::string name = "tanh_linear";
    int line = 0;
    if (n) {
        check_keys(n, {"name", "parameters", "theta_box", "transition_scale", "observation_scale", "drift",
                       "observation", "variant", "observation_box", "observation_cells"},
                   "model");
        if (n["name"]) {
            name = scalar<std::string>(n["name"], "name");
            line = line_of(n["name"]);
        }
    }
    GaussianModelConfig c = model_preset(name, line);
    if (n) {
        read(n, "parameters", c.parameters);
        if (n["theta_box"]) {
            const Box b = read_box(n["theta_box"], "theta_box");
            c.theta_box = ParameterBox{b.lower, b.upper};
        }
        read(n, "transition_scale", c.transition_scale);
        read(n, "observation_scale", c.observation_scale);
        if (n["drift"]) {
            c.drift = read_terms(n["drift"], "drift");
        }
        if (n["observation"]) {
            c.observation = read_terms(n["observation"], "observation");
        }
        if (const YAML::Node v = n["variant"]) {
            const std::string variant = scalar<std::string>(v, "variant");
            if (variant == "compact") {
                c.compact_observations = true;
            } else if (variant == "gaussian") {
                c.compact_observations = false;
            } else {
                throw ConfigError("variant must be 'compact' or 'gaussian'", line_of(v));
            }
        }
        if (n["observation_box"]) {
            c.observation_box = read_box(n["observation_box"], "observation_box");
        }
        read(n, "observation_cells", c.observation_cells);
    }
    if (grid) {
        c.state_box = read_box(grid, "grid", {"lower", "upper", "cells"});
        if (grid["cells"]) {
            c.state_cells = sequence<int>(grid["cells"], "grid.cells");
        }
    }
    c.max_order = order;
    try {
        TruncatedGaussianModel probe(c);
    } catch (const std::exception& e) {
        throw ConfigError(e.what(), n ? line_of(n) : 0);
    }
    return c;
}

inline bool inside(const ParameterBox& box, const std::vector<double>& t)
{
    if (static_cast<int>(t.size()) != box.dimension()) {
        return false;
    }
    return box.contains(Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())));
}

}  // namespace detail

/// Parse and validate; throws ConfigError.
inline RunConfig parse_config(const YAML::Node& root)
{
    using namespace detail;
    if (!root || !root.IsMap()) {
        throw ConfigError("config must be a mapping", root ? line_of(root) : 0);
    }
    check_keys(root, {"experiment", "seed", "output_dir", "model", "grid", "order", "theta", "truth", "initial",
                      "run"},
               "config");
    RunConfig cfg;
    read(root, "experiment", cfg.experiment);
    if (!cfg.experiment.empty()) {
        bool known = false;
        for (const auto& s : subcommands()) {
            known = known || s == cfg.experiment;
        }
        if (!known) {
            throw ConfigError("unknown experiment '" + cfg.experiment + "'", line_of(root["experiment"]));
        }
    }
    if (!root["seed"]) {
        throw ConfigError("missing required key 'seed'", line_of(root));
    }
    cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
    read(root, "output_dir", cfg.output_dir);
    int order = 2;
    read(root, "order", order);
    if (order < 1 || order > 3) {
        throw ConfigError("order must be 1, 2 or 3", line_of(root["order"]));
    }
    cfg.model = read_model(root["model"], root["grid"], order);
    if (!root["theta"]) {
        throw ConfigError("missing required key 'theta'", line_of(root));
    }
    cfg.theta = sequence<double>(root["theta"], "theta");
    if (!inside(cfg.model.theta_box, cfg.theta)) {
        throw ConfigError("theta is not inside theta_box", line_of(root["theta"]));
    }
    read(root, "truth", cfg.truth);
    if (!cfg.truth.empty() && !inside(cfg.model.theta_box, cfg.truth)) {
        throw ConfigError("truth is not inside theta_box", line_of(root["truth"]));
    }
    read(root, "initial", cfg.initial);
    if (cfg.initial != "uniform" && cfg.initial.rfind("point:", 0) != 0) {
        throw ConfigError("initial must be 'uniform' or 'point:<index>'", line_of(root["initial"]));
    }

    if (const YAML::Node r = root["run"]) {
        check_keys(r, {"n", "n_max", "replicas", "theta_count", "theta_margin", "thetas", "pairs", "fit_from", "fd_h",
                       "fd_levels", "rel_tol", "abs_floor", "max_rate", "min_r_squared", "functional",
                       "functional_slot", "initial_points", "n_early", "n_late", "spread_factor", "se_band", "rate_n",
                       "rate_replicas", "rml_a", "rml_b", "rml_steps", "rml_init", "rml_window", "theta_samples",
                       "y_lower", "y_upper", "y_count", "y_spacing", "psi_exponent", "psi_tolerance"},
                   "run");
        ExperimentConfig& e = cfg.run;
        read(r, "n", e.n);
        read(r, "n_max", e.n_max);
        read(r, "replicas", e.replicas);
        read(r, "theta_count", e.theta_count);
        read(r, "theta_margin", e.theta_margin);
        if (const YAML::Node ts = r["thetas"]) {
            if (!ts.IsSequence()) {
                throw ConfigError("'thetas' must be a list of parameter vectors", line_of(ts));
            }
            for (const auto& t : ts) {
                auto v = sequence<double>(t, "thetas");
                if (!inside(cfg.model.theta_box, v)) {
                    throw ConfigError("a 'thetas' entry is not inside theta_box", line_of(t));
                }
                e.thetas.push_back(std::move(v));
            }
        }
        read(r, "pairs", e.pairs);
        read(r, "fit_from", e.fit_from);
        read(r, "fd_h", e.fd_h);
        read(r, "fd_levels", e.fd_levels);
        read(r, "rel_tol", e.rel_tol);
        read(r, "abs_floor", e.abs_floor);
        read(r, "max_rate", e.max_rate);
        read(r, "min_r_squared", e.min_r_squared);
        read(r, "functional", e.functional);
        read(r, "functional_slot", e.functional_slot);
        read(r, "initial_points", e.initial_points);
        read(r, "n_early", e.n_early);
        read(r, "n_late", e.n_late);
        read(r, "spread_factor", e.spread_factor);
        read(r, "se_band", e.se_band);
        read(r, "rate_n", e.rate_n);
        read(r, "rate_replicas", e.rate_replicas);
        read(r, "rml_a", e.rml_a);
        read(r, "rml_b", e.rml_b);
        read(r, "rml_steps", e.rml_steps);
        read(r, "rml_init", e.rml_init);
        read(r, "rml_window", e.rml_window);
        read(r, "theta_samples", e.theta_samples);
        read(r, "y_lower", e.y_lower);
        read(r, "y_upper", e.y_upper);
        read(r, "y_count", e.y_count);
        read(r, "y_spacing", e.y_spacing);
        read(r, "psi_exponent", e.psi_exponent);
        read(r, "psi_tolerance", e.psi_tolerance);

        if (e.n < 1 || e.replicas < 2 || e.fd_levels < 1 || !(e.fd_h > 0.0) || e.theta_count < 1 || e.pairs < 1 ||
            e.n_max < 1 || e.rate_replicas < 2 || e.rml_steps < 1 || e.y_count < 2) {
            throw ConfigError("run block has a non-positive count or step", line_of(r));
        }
        if (e.functional != "posterior_mean" && e.functional != "constant" && e.functional != "state" &&
            e.functional != "derivative_tv") {
            throw ConfigError("unknown functional '" + e.functional + "'", line_of(r["functional"]));
        }
        if (e.y_spacing != "log" && e.y_spacing != "linear") {
            throw ConfigError("y_spacing must be 'log' or 'linear'", line_of(r["y_spacing"]));
        }
        if (!e.rml_init.empty() && !inside(cfg.model.theta_box, e.rml_init)) {
            throw ConfigError("rml_init is not inside theta_box", line_of(r["rml_init"]));
        }
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line + 1);
    }
    return parse_config(root);
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'", 0);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace detail {

inline void emit_doubles(YAML::Emitter& out, const std::vector<double>& v)
{
    out << YAML::Flow << YAML::BeginSeq;
    for (double x : v) {
        out << format_double(x);
    }
    out << YAML::EndSeq;
}

inline void emit_box(YAML::Emitter& out, const std::vector<double>& lower, const std::vector<double>& upper)
{
    out << YAML::BeginMap;
    out << YAML::Key << "lower" << YAML::Value;
    emit_doubles(out, lower);
    out << YAML::Key << "upper" << YAML::Value;
    emit_doubles(out, upper);
    out << YAML::EndMap;
}

inline void emit_terms(YAML::Emitter& out, const std::vector<LinearTerm>& terms)
{
    out << YAML::BeginSeq;
    for (const auto& t : terms) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "parameter" << YAML::Value << t.parameter;
        out << YAML::Key << "output" << YAML::Value << t.output;
        out << YAML::Key << "input" << YAML::Value << t.input;
        out << YAML::Key << "basis" << YAML::Value << basis_name(t.basis);
        out << YAML::Key << "coefficient" << YAML::Value << format_double(t.coefficient);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
}

}  // namespace detail

/// Resolved config as YAML; parse_config_text(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& c)
{
    using detail::emit_box;
    using detail::emit_doubles;
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "experiment" << YAML::Value << c.experiment;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << c.output_dir;
    out << YAML::Key << "order" << YAML::Value << c.model.max_order;

    const GaussianModelConfig& m = c.model;
    out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << m.name;
    out << YAML::Key << "parameters" << YAML::Value << m.parameters;
    out << YAML::Key << "theta_box" << YAML::Value;
    emit_box(out, m.theta_box.lower, m.theta_box.upper);
    out << YAML::Key << "transition_scale" << YAML::Value;
    emit_doubles(out, m.transition_scale);
    out << YAML::Key << "observation_scale" << YAML::Value;
    emit_doubles(out, m.observation_scale);
    out << YAML::Key << "drift" << YAML::Value;
    detail::emit_terms(out, m.drift);
    out << YAML::Key << "observation" << YAML::Value;
    detail::emit_terms(out, m.observation);
    out << YAML::Key << "variant" << YAML::Value << (m.compact_observations ? "compact" : "gaussian");
    out << YAML::Key << "observation_box" << YAML::Value;
    emit_box(out, m.observation_box.lower, m.observation_box.upper);
    out << YAML::Key << "observation_cells" << YAML::Value << m.observation_cells;
    out << YAML::EndMap;

    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lower" << YAML::Value;
    emit_doubles(out, m.state_box.lower);
    out << YAML::Key << "upper" << YAML::Value;
    emit_doubles(out, m.state_box.upper);
    out << YAML::Key << "cells" << YAML::Value << YAML::Flow << m.state_cells;
    out << YAML::EndMap;

    out << YAML::Key << "theta" << YAML::Value;
    emit_doubles(out, c.theta);
    if (!c.truth.empty()) {
        out << YAML::Key << "truth" << YAML::Value;
        emit_doubles(out, c.truth);
    }
    out << YAML::Key << "initial" << YAML::Value << c.initial;

    const ExperimentConfig& e = c.run;
    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "n" << YAML::Value << e.n;
    out << YAML::Key << "n_max" << YAML::Value << e.n_max;
    out << YAML::Key << "replicas" << YAML::Value << e.replicas;
    out << YAML::Key << "theta_count" << YAML::Value << e.theta_count;
    out << YAML::Key << "theta_margin" << YAML::Value << format_double(e.theta_margin);
    if (!e.thetas.empty()) {
        out << YAML::Key << "thetas" << YAML::Value << YAML::BeginSeq;
        for (const auto& t : e.thetas) {
            emit_doubles(out, t);
        }
        out << YAML::EndSeq;
    }
    out << YAML::Key << "pairs" << YAML::Value << e.pairs;
    out << YAML::Key << "fit_from" << YAML::Value << e.fit_from;
    out << YAML::Key << "fd_h" << YAML::Value << format_double(e.fd_h);
    out << YAML::Key << "fd_levels" << YAML::Value << e.fd_levels;
    out << YAML::Key << "rel_tol" << YAML::Value << format_double(e.rel_tol);
    out << YAML::Key << "abs_floor" << YAML::Value << format_double(e.abs_floor);
    out << YAML::Key << "max_rate" << YAML::Value << format_double(e.max_rate);
    out << YAML::Key << "min_r_squared" << YAML::Value << format_double(e.min_r_squared);
    out << YAML::Key << "functional" << YAML::Value << e.functional;
    out << YAML::Key << "functional_slot" << YAML::Value << e.functional_slot;
    if (!e.initial_points.empty()) {
        out << YAML::Key << "initial_points" << YAML::Value << YAML::Flow << e.initial_points;
    }
    out << YAML::Key << "n_early" << YAML::Value << e.n_early;
    out << YAML::Key << "n_late" << YAML::Value << e.n_late;
    out << YAML::Key << "spread_factor" << YAML::Value << format_double(e.spread_factor);
    out << YAML::Key << "se_band" << YAML::Value << format_double(e.se_band);
    out << YAML::Key << "rate_n" << YAML::Value << e.rate_n;
    out << YAML::Key << "rate_replicas" << YAML::Value << e.rate_replicas;
    out << YAML::Key << "rml_a" << YAML::Value << format_double(e.rml_a);
    out << YAML::Key << "rml_b" << YAML::Value << format_double(e.rml_b);
    out << YAML::Key << "rml_steps" << YAML::Value << e.rml_steps;
    if (!e.rml_init.empty()) {
        out << YAML::Key << "rml_init" << YAML::Value;
        emit_doubles(out, e.rml_init);
    }
    out << YAML::Key << "rml_window" << YAML::Value << e.rml_window;
    out << YAML::Key << "theta_samples" << YAML::Value << e.theta_samples;
    out << YAML::Key << "y_lower" << YAML::Value << format_double(e.y_lower);
    out << YAML::Key << "y_upper" << YAML::Value << format_double(e.y_upper);
    out << YAML::Key << "y_count" << YAML::Value << e.y_count;
    out << YAML::Key << "y_spacing" << YAML::Value << e.y_spacing;
    out << YAML::Key << "psi_exponent" << YAML::Value << format_double(e.psi_exponent);
    out << YAML::Key << "psi_tolerance" << YAML::Value << format_double(e.psi_tolerance);
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace ofjet::cli
