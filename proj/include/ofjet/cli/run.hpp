#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "ofjet/cli/config.hpp"
#include "ofjet/experiments.hpp"
#include "ofjet/gaussian_model.hpp"

namespace ofjet::cli {

enum ExitCode { kPass = 0, kThresholdFail = 1, kInvalidConfig = 2, kNumericalAbort = 3 };

inline constexpr const char* kOutputDirEnv = "OFJET_OUTPUT_DIR";

namespace detail {

inline Eigen::VectorXd to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline GridMeasure initial_law(const RunConfig& cfg, const GridPtr& grid)
{
    if (cfg.initial == "uniform") {
        return GridMeasure::uniform(grid);
    }
    int j = 0;
    try {
        j = std::stoi(cfg.initial.substr(6));
    } catch (const std::exception&) {
        throw ConfigError("initial: bad grid index in '" + cfg.initial + "'", 0);
    }
    if (j < 0 || j >= grid->size()) {
        throw ConfigError("initial: grid index out of range", 0);
    }
    return GridMeasure::point_mass(grid, j);
}

inline std::string join(const Eigen::VectorXd& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += (i ? " " : "") + format_double(v(i));
    }
    return s;
}

inline std::vector<Parameter> sweep_thetas(const RunConfig& cfg, const StateSpaceModel& model, const char* label)
{
    if (!cfg.run.thetas.empty()) {
        std::vector<Parameter> out;
        for (const auto& t : cfg.run.thetas) {
            out.push_back(model.parameter(to_vector(t)));
        }
        return out;
    }
    Rng rng(derive_seed(cfg.seed, label, 0));
    return random_thetas(model.parameter_box(), cfg.run.theta_count, rng, cfg.run.theta_margin);
}

struct Context {
    const RunConfig& cfg;
    std::shared_ptr<const TruncatedGaussianModel> model;
    Parameter theta;
    Parameter truth;
    GridMeasure lambda0;

    explicit Context(const RunConfig& c)
        : cfg(c),
          model(make_gaussian_model(c.model)),
          theta(model->parameter(to_vector(c.theta))),
          truth(model->parameter(to_vector(c.truth.empty() ? c.theta : c.truth))),
          lambda0(initial_law(c, model->grid()))
    {
    }

    std::vector<Observation> observations(int n, const char* label) const
    {
        return simulate(*model, truth, lambda0, n, derive_seed(cfg.seed, label, 0)).observations;
    }

    SweepOptions sweep_options() const
    {
        SweepOptions o;
        o.scheme = FDScheme{cfg.run.fd_h, cfg.run.fd_levels};
        o.rel_tol = cfg.run.rel_tol;
        o.abs_floor = cfg.run.abs_floor;
        return o;
    }
};

}  // namespace detail

inline ExperimentReport run_simulate(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const Trajectory traj = simulate(*ctx.model, ctx.truth, ctx.lambda0, cfg.run.n, derive_seed(cfg.seed, "simulate", 0));
    ExperimentReport report;
    report.experiment = "simulate";
    const int dx = ctx.model->dims().state;
    const int dy = ctx.model->dims().observation;
    report.columns = {"n"};
    for (int k = 0; k < dx; ++k) {
        report.columns.push_back("x" + std::to_string(k + 1));
    }
    for (int k = 0; k < dy; ++k) {
        report.columns.push_back("y" + std::to_string(k + 1));
    }
    for (int n = 0; n <= traj.length(); ++n) {
        std::vector<Cell> row{static_cast<std::int64_t>(n)};
        for (int k = 0; k < dx; ++k) {
            row.emplace_back(traj.states[static_cast<std::size_t>(n)](k));
        }
        for (int k = 0; k < dy; ++k) {
            if (n == 0) {
                row.emplace_back(std::string());
            } else {
                row.emplace_back(traj.observations[static_cast<std::size_t>(n) - 1](k));
            }
        }
        report.add_row(std::move(row));
    }
    report.notes.push_back("seed " + std::to_string(traj.seed));
    return report;
}

inline ExperimentReport run_check_derivs(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const auto thetas = detail::sweep_thetas(cfg, *ctx.model, "check-derivs/thetas");
    const auto ys = ctx.observations(cfg.run.n, "check-derivs/observations");
    return derivative_identity_sweep(*ctx.model, thetas, ys, ctx.lambda0, ctx.sweep_options());
}

inline ExperimentReport run_forgetting(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const auto index = ctx.model->index_set();
    Rng rng(derive_seed(cfg.seed, "forgetting/pairs", 0));
    std::vector<std::pair<VectorMeasure, VectorMeasure>> pairs;
    for (int k = 0; k < cfg.run.pairs; ++k) {
        VectorMeasure a = random_l0(ctx.model->grid(), index, rng);
        VectorMeasure b = random_l0(ctx.model->grid(), index, rng);
        pairs.emplace_back(std::move(a), std::move(b));
    }
    ForgettingOptions opts;
    opts.n_max = cfg.run.n_max;
    opts.fit_from = cfg.run.fit_from;
    opts.seed = cfg.seed;
    const auto curves = forgetting_experiment(*ctx.model, ctx.theta, pairs, opts, &ctx.truth);

    ExperimentReport report;
    report.experiment = "forgetting";
    report.columns = {"pair", "n", "distance", "fitted_rate", "slope", "intercept", "r_squared"};
    double worst_rate = 0.0, worst_slope = -std::numeric_limits<double>::infinity();
    double worst_r2 = 1.0;
    for (std::size_t p = 0; p < curves.size(); ++p) {
        const DecayCurve& c = curves[p];
        for (std::size_t i = 0; i < c.horizon.size(); ++i) {
            report.add_row({static_cast<std::int64_t>(p), static_cast<std::int64_t>(c.horizon[i]), c.distance[i],
                            c.rate, c.fit.slope, c.fit.intercept, c.fit.r_squared});
        }
        if (!c.fitted) {
            report.notes.push_back("pair " + std::to_string(p) + ": fit skipped");
            worst_rate = std::numeric_limits<double>::infinity();
            worst_r2 = 0.0;
            continue;
        }
        if (c.underflow_at >= 0) {
            report.notes.push_back("pair " + std::to_string(p) + ": distance underflow at n = " +
                                   std::to_string(c.underflow_at));
        }
        worst_rate = std::max(worst_rate, c.rate);
        worst_slope = std::max(worst_slope, c.fit.slope);
        worst_r2 = std::min(worst_r2, c.fit.r_squared);
    }
    report.add_check(make_check("max_slope", worst_slope, "<", 0.0));
    report.add_check(make_check("max_fitted_rate", worst_rate, "<=", cfg.run.max_rate));
    report.add_check(make_check("min_r_squared", worst_r2, ">=", cfg.run.min_r_squared));
    return report;
}

inline ExperimentReport run_ergodicity(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const auto& model = *ctx.model;
    const GridPtr& grid = model.grid();
    const auto index = model.index_set();
    std::vector<int> points = cfg.run.initial_points;
    if (points.empty()) {
        points = {0, grid->size() / 2, grid->size() - 1};
    }
    std::vector<InitialCondition> zs;
    Rng rng(derive_seed(cfg.seed, "ergodicity/initial", 0));
    for (int j : points) {
        if (j < 0 || j >= grid->size()) {
            throw ConfigError("initial_points: grid index out of range", 0);
        }
        const Point x = grid->point(j);
        const Observation y = model.sample_observation(ctx.truth, x, rng);
        zs.push_back({x, y, embed(GridMeasure::point_mass(grid, j), index)});
    }
    FunctionalSpec phi;
    const std::string& f = cfg.run.functional;
    phi.kind = f == "constant" ? Functional::constant
             : f == "state"    ? Functional::state
             : f == "derivative_tv" ? Functional::derivative_tv
                                    : Functional::posterior_mean;
    phi.slot = cfg.run.functional_slot;
    if (phi.slot < 0 || phi.slot >= index->size()) {
        throw ConfigError("functional_slot out of range", 0);
    }
    const int n_max = std::max({cfg.run.n_max, cfg.run.n_late, cfg.run.n_early});
    const ErgodicityProbe aligned =
        ergodicity_experiment(model, ctx.theta, phi, zs, n_max, cfg.run.replicas, cfg.seed, Chain::aligned, &ctx.truth);
    const ErgodicityProbe shifted =
        ergodicity_experiment(model, ctx.theta, phi, zs, n_max, cfg.run.replicas, cfg.seed, Chain::shifted, &ctx.truth);

    ExperimentReport report;
    report.experiment = "ergodicity";
    report.columns = {"chain", "z", "n", "estimate", "standard_error", "spread"};
    for (const ErgodicityProbe* p : {&aligned, &shifted}) {
        const std::string name = p->chain == Chain::aligned ? "aligned" : "shifted";
        for (std::size_t z = 0; z < zs.size(); ++z) {
            for (std::size_t n = 0; n < p->horizon.size(); ++n) {
                report.add_row({name, static_cast<std::int64_t>(z), static_cast<std::int64_t>(n), p->estimate[z][n].mean,
                                p->estimate[z][n].standard_error, p->spread[n]});
            }
        }
    }
    const auto early = static_cast<std::size_t>(cfg.run.n_early);
    const auto late = static_cast<std::size_t>(cfg.run.n_late);
    const double ratio = aligned.spread[late] > 0.0 ? aligned.spread[early] / aligned.spread[late]
                                                    : (aligned.spread[early] > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    double worst_z = 0.0;
    for (std::size_t z = 0; z < zs.size(); ++z) {
        const auto& a = aligned.estimate[z][late];
        const auto& b = shifted.estimate[z][late];
        const double se = std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error);
        const double diff = std::abs(a.mean - b.mean);
        worst_z = std::max(worst_z, se > 0.0 ? diff / se : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    if (phi.kind == Functional::constant) {
        report.notes.push_back("constant functional: spreads are identically zero");
    } else {
        report.add_check(make_check("spread_ratio_early_over_late", ratio, ">=", cfg.run.spread_factor));
    }
    report.add_check(make_check("aligned_vs_shifted_z_score", worst_z, "<=", cfg.run.se_band));
    report.notes.push_back("aligned spread decay rate " + format_double(std::exp(aligned.spread_fit.slope)));
    return report;
}

inline ExperimentReport run_loglik(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const auto& model = *ctx.model;
    const auto thetas = detail::sweep_thetas(cfg, model, "loglik/thetas");
    const auto ys = ctx.observations(cfg.run.n, "loglik/observations");
    ExperimentReport report = loglik_derivative_sweep(model, thetas, ys, ctx.lambda0, ctx.sweep_options());
    report.experiment = "loglik";

    // average log-likelihood rate at theta for two initial laws and two horizons
    const GridPtr& grid = model.grid();
    const GridMeasure uniform = GridMeasure::uniform(grid);
    const GridMeasure corner = GridMeasure::point_mass(grid, 0);
    const int n1 = cfg.run.rate_n;
    const int reps = cfg.run.rate_replicas;
    const RateEstimate a = avg_loglik_rate(model, ctx.theta, uniform, n1, reps, cfg.seed, &ctx.truth, &uniform);
    const RateEstimate b = avg_loglik_rate(model, ctx.theta, corner, n1, reps, cfg.seed, &ctx.truth, &uniform);
    const RateEstimate c =
        avg_loglik_rate(model, ctx.theta, uniform, 2 * n1, reps, derive_seed(cfg.seed, "loglik/long", 0), &ctx.truth,
                        &uniform);
    auto z = [](double m1, double s1, double m2, double s2) {
        const double se = std::sqrt(s1 * s1 + s2 * s2);
        return se > 0.0 ? std::abs(m1 - m2) / se : 0.0;
    };
    report.add_check(make_check("rate_initial_law_z_score", z(a.mean(0), a.standard_error(0), b.mean(0), b.standard_error(0)),
                                "<=", cfg.run.se_band));
    report.add_check(make_check("rate_horizon_z_score", z(a.mean(0), a.standard_error(0), c.mean(0), c.standard_error(0)),
                                "<=", cfg.run.se_band));
    const bool at_truth = cfg.truth.empty() || cfg.truth == cfg.theta;
    double worst_score = 0.0;
    for (int s = 0; s < a.index->size(); ++s) {
        const MultiIndex& alpha = (*a.index)[s];
        report.notes.push_back("rate " + multiindex_label(alpha) + " n=" + std::to_string(n1) + " mean " +
                               format_double(a.mean(s)) + " se " + format_double(a.standard_error(s)));
        if (alpha.degree() == 1 && a.standard_error(s) > 0.0) {
            worst_score = std::max(worst_score, std::abs(a.mean(s)) / a.standard_error(s));
        }
    }
    if (at_truth) {
        report.add_check(make_check("score_at_truth_z_score", worst_score, "<=", cfg.run.se_band));
    }
    return report;
}

inline ExperimentReport run_rml(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const auto& model = *ctx.model;
    const Parameter init = cfg.run.rml_init.empty() ? ctx.theta : model.parameter(detail::to_vector(cfg.run.rml_init));
    const auto ys = ctx.observations(cfg.run.rml_steps, "rml/observations");
    RmlOptions opts;
    opts.a = cfg.run.rml_a;
    opts.b = cfg.run.rml_b;
    opts.n_steps = cfg.run.rml_steps;
    const RmlTrace trace = rml_demo(model, init, ctx.lambda0, ys, opts);

    ExperimentReport report;
    report.experiment = "rml";
    report.columns = {"k"};
    for (int i = 0; i < model.dims().parameters; ++i) {
        report.columns.push_back("theta" + std::to_string(i + 1));
    }
    for (std::size_t k = 0; k < trace.theta.size(); ++k) {
        std::vector<Cell> row{static_cast<std::int64_t>(k)};
        for (Eigen::Index i = 0; i < trace.theta[k].size(); ++i) {
            row.emplace_back(trace.theta[k](i));
        }
        report.add_row(std::move(row));
    }
    const int window = std::min(cfg.run.rml_window, static_cast<int>(trace.theta.size()));
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(init.dimension());
    for (std::size_t k = trace.theta.size() - static_cast<std::size_t>(window); k < trace.theta.size(); ++k) {
        avg += trace.theta[k];
    }
    avg /= window;
    const double start = (init.theta() - ctx.truth.theta()).norm();
    const double end = (avg - ctx.truth.theta()).norm();
    report.notes.push_back("final window average " + detail::join(avg));
    report.notes.push_back("projections " + std::to_string(trace.projections.size()));
    if (start > 0.0) {
        report.add_check(make_check("final_distance_over_initial", end / start, "<", 1.0));
    } else {
        report.notes.push_back("started at truth; final distance " + format_double(end));
    }
    return report;
}

inline std::vector<Observation> y_samples(const RunConfig& cfg, int dy)
{
    std::vector<Observation> ys;
    const auto& e = cfg.run;
    for (int k = 0; k < e.y_count; ++k) {
        const double t = static_cast<double>(k) / (e.y_count - 1);
        const double v = e.y_spacing == "log" ? std::exp(std::log(e.y_lower) + t * (std::log(e.y_upper) - std::log(e.y_lower)))
                                              : e.y_lower + t * (e.y_upper - e.y_lower);
        ys.push_back(Eigen::VectorXd::Constant(dy, v));
    }
    return ys;
}

inline ExperimentReport run_assumptions(const RunConfig& cfg)
{
    detail::Context ctx(cfg);
    const auto& model = *ctx.model;
    Rng rng(derive_seed(cfg.seed, "assumptions/thetas", 0));
    std::vector<Parameter> thetas = cfg.run.thetas.empty()
                                        ? random_thetas(model.parameter_box(), cfg.run.theta_samples, rng, cfg.run.theta_margin)
                                        : detail::sweep_thetas(cfg, model, "assumptions/thetas");
    const auto ys = y_samples(cfg, model.dims().observation);
    if (const auto box = model.observation_box()) {
        for (const auto& y : ys) {
            if (!box->contains(y)) {
                throw ConfigError("y samples must lie inside the observation box", 0);
            }
        }
    }
    const AssumptionConstants c = assumption_constants(model, thetas, ys);
    ExperimentReport report;
    report.experiment = "assumptions";
    report.columns = {"y", "psi_hat"};
    for (std::size_t k = 0; k < ys.size(); ++k) {
        report.add_row({detail::join(ys[k]), c.psi[k]});
    }
    report.notes.push_back(std::string("variant ") + (c.compact ? "compact" : "gaussian"));
    report.notes.push_back("kernel lower bound " + format_double(c.eps_kernel));
    report.notes.push_back("derivative bound " + format_double(c.k_kernel));
    if (!c.compact) {
        report.notes.push_back("observation score bound " + format_double(c.k_observation));
    }
    report.notes.push_back("closed-form psi constant " + format_double(c.c1));
    report.notes.push_back("minimum joint kernel " + format_double(c.min_kernel));
    report.add_check(make_check("epsilon_positive", c.epsilon, ">", 0.0));
    report.add_check(make_check("epsilon_below_one", c.epsilon, "<", 1.0));
    if (c.compact) {
        report.add_check(make_check("psi_uniform_finite", std::isfinite(c.psi_uniform) ? c.psi_uniform : HUGE_VAL, "<",
                                    HUGE_VAL));
    } else {
        report.notes.push_back("growth exponent " + format_double(c.growth.slope) + " r2 " +
                               format_double(c.growth.r_squared));
        report.add_check(make_check("psi_growth_exponent_error", std::abs(c.growth.slope - cfg.run.psi_exponent), "<=",
                                    cfg.run.psi_tolerance));
    }
    return report;
}

inline ExperimentReport run_experiment(const std::string& name, const RunConfig& cfg)
{
    if (name == "simulate") {
        return run_simulate(cfg);
    }
    if (name == "check-derivs") {
        return run_check_derivs(cfg);
    }
    if (name == "forgetting") {
        return run_forgetting(cfg);
    }
    if (name == "ergodicity") {
        return run_ergodicity(cfg);
    }
    if (name == "loglik") {
        return run_loglik(cfg);
    }
    if (name == "rml") {
        return run_rml(cfg);
    }
    if (name == "assumptions") {
        return run_assumptions(cfg);
    }
    throw ConfigError("unknown experiment '" + name + "'", 0);
}

/**
 * Load, run, write results.csv, summary.txt and config.yaml into the output
 * directory. `subcommand` empty means "take it from the config".
 */
inline int run(const std::string& subcommand, const std::string& config_path, std::ostream& log = std::cerr)
{
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        log << config_path << ": " << e.what() << '\n';
        return kInvalidConfig;
    }
    std::string name = subcommand.empty() ? cfg.experiment : subcommand;
    if (name.empty()) {
        log << config_path << ": no experiment given on the command line or in the config\n";
        return kInvalidConfig;
    }
    if (!cfg.experiment.empty() && cfg.experiment != name) {
        log << config_path << ": config is for '" << cfg.experiment << "', not '" << name << "'\n";
        return kInvalidConfig;
    }
    cfg.experiment = name;
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) {
        cfg.output_dir = dir;
    }

    ExperimentReport report;
    try {
        report = run_experiment(name, cfg);
    } catch (const ConfigError& e) {
        log << config_path << ": " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const NumericalError& e) {
        log << "numerical abort: " << e.what() << '\n';
        return kNumericalAbort;
    } catch (const std::logic_error& e) {
        log << config_path << ": " << e.what() << '\n';
        return kInvalidConfig;
    }

    const std::filesystem::path out(cfg.output_dir);
    std::filesystem::create_directories(out);
    {
        std::ofstream csv(out / "results.csv", std::ios::binary);
        write_csv(csv, report);
    }
    {
        std::ofstream summary(out / "summary.txt", std::ios::binary);
        write_summary(summary, report);
    }
    {
        std::ofstream echo(out / "config.yaml", std::ios::binary);
        echo << emit_config(cfg);
    }
    write_summary(std::cout, report);
    return report.passed() ? kPass : kThresholdFail;
}

}  // namespace ofjet::cli
