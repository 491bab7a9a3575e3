#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/assumptions.hpp"
#include "ofjet/filter.hpp"
#include "ofjet/grid.hpp"
#include "ofjet/loglik.hpp"
#include "ofjet/model.hpp"
#include "ofjet/multiindex.hpp"
#include "ofjet/oracle.hpp"
#include "ofjet/random.hpp"
#include "ofjet/report.hpp"
#include "ofjet/stats.hpp"

namespace ofjet {

/// Distances below this count as underflow and end a decay curve.
inline constexpr double kDistanceFloor = 1e-300;

inline std::string multiindex_label(const MultiIndex& a)
{
    std::ostringstream os;
    os << a;
    return os.str();
}

/// Uniform draws from the box shrunk by `margin` (relative to each side length).
inline std::vector<Parameter> random_thetas(const ParameterBox& box, int count, Rng& rng, double margin = 0.1)
{
    std::vector<Parameter> out;
    out.reserve(static_cast<std::size_t>(count));
    const int d = box.dimension();
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd t(d);
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double span = box.upper[ii] - box.lower[ii];
            t(i) = box.lower[ii] + span * (margin + (1.0 - 2.0 * margin) * rng.uniform());
        }
        out.emplace_back(t, box);
    }
    return out;
}

/// Random element of L_0: a positive probability density in slot 0, zero-mass Gaussian noise elsewhere.
inline VectorMeasure random_l0(const GridPtr& grid, std::shared_ptr<const IndexSet> index, Rng& rng,
                               double derivative_scale = 1.0)
{
    const int n = grid->size();
    const Eigen::VectorXd& w = grid->weights();
    Eigen::MatrixXd d(n, index->size());
    for (int i = 0; i < n; ++i) {
        d(i, 0) = 0.05 + rng.uniform();
    }
    d.col(0) /= d.col(0).dot(w);
    for (int s = 1; s < index->size(); ++s) {
        for (int i = 0; i < n; ++i) {
            d(i, s) = derivative_scale * rng.normal();
        }
        d.col(s).array() -= d.col(s).dot(w) / grid->total_measure();
    }
    return VectorMeasure(grid, std::move(index), std::move(d));
}

/// Keeps the components of `lambda` whose multi-indices are in `index`.
inline VectorMeasure restrict_to(const VectorMeasure& lambda, std::shared_ptr<const IndexSet> index)
{
    VectorMeasure out = VectorMeasure::zero(lambda.grid(), index);
    for (int s = 0; s < index->size(); ++s) {
        out.density(s) = lambda.density(lambda.index_set()->slot((*index)[s]));
    }
    return out;
}

// ---------------------------------------------------------------- forgetting

struct DecayCurve {
    std::vector<int> horizon;
    std::vector<double> distance;
    int fit_from = 0;
    int fit_to = 0;
    LineFit fit;
    double rate = std::numeric_limits<double>::quiet_NaN();  ///< exp(slope)
    bool fitted = false;
    bool identical = false;
    int underflow_at = -1;
};

/// ||F^{0:n}(Lambda) - F^{0:n}(Lambda')|| for n = 0..len(observations), fitted on n >= fit_from.
inline DecayCurve decay_curve(const BoundKernel& kernel, const std::vector<Observation>& observations,
                              const VectorMeasure& a, const VectorMeasure& b, int fit_from)
{
    DecayCurve curve;
    VectorMeasure la = a;
    VectorMeasure lb = b;
    curve.horizon.push_back(0);
    curve.distance.push_back(measure_distance(la, lb));
    int n = 0;
    for (const auto& y : observations) {
        ++n;
        const auto k = kernel.at(y);
        la = filter_step_full(*k, la, n).next;
        lb = filter_step_full(*k, lb, n).next;
        const double dist = measure_distance(la, lb);
        if (dist < kDistanceFloor && dist > 0.0) {
            curve.underflow_at = n;
            break;
        }
        curve.horizon.push_back(n);
        curve.distance.push_back(dist);
    }
    curve.fit_from = fit_from;
    curve.fit_to = curve.horizon.back();
    std::vector<double> xs, ys;
    bool all_zero = true;
    for (std::size_t i = 0; i < curve.horizon.size(); ++i) {
        if (curve.distance[i] != 0.0) {
            all_zero = false;
        }
        if (curve.horizon[i] >= fit_from && curve.distance[i] > 0.0) {
            xs.push_back(curve.horizon[i]);
            ys.push_back(std::log(curve.distance[i]));
        }
    }
    curve.identical = all_zero;
    if (xs.size() >= 3) {
        curve.fit = fit_line(xs, ys);
        curve.rate = std::exp(curve.fit.slope);
        curve.fitted = true;
    }
    return curve;
}

struct ForgettingOptions {
    int n_max = 60;
    int fit_from = -1;  ///< default n_max / 4
    std::uint64_t seed = 0;
};

/// One observation path, every pair filtered along it.
inline std::vector<DecayCurve> forgetting_experiment(const StateSpaceModel& model, const Parameter& theta,
                                                     const std::vector<std::pair<VectorMeasure, VectorMeasure>>& pairs,
                                                     const ForgettingOptions& opts, const Parameter* truth = nullptr)
{
    if (opts.n_max < 20) {
        throw std::invalid_argument("forgetting_experiment: n_max must be >= 20");
    }
    for (const auto& [a, b] : pairs) {
        if (!a.in_l0() || !b.in_l0()) {
            throw std::invalid_argument("forgetting_experiment: initial conditions must lie in L_0");
        }
    }
    const Trajectory traj = simulate(model, truth ? *truth : theta, GridMeasure::uniform(model.grid()), opts.n_max,
                                     derive_seed(opts.seed, "forgetting", 0));
    const auto kernel = model.bind(theta);
    const int fit_from = opts.fit_from >= 0 ? opts.fit_from : opts.n_max / 4;
    std::vector<DecayCurve> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        out.push_back(decay_curve(*kernel, traj.observations, a, b, fit_from));
    }
    return out;
}

// ---------------------------------------------------------------- ergodicity

enum class Functional { constant, posterior_mean, state, derivative_tv };

struct FunctionalSpec {
    Functional kind = Functional::posterior_mean;
    int slot = 0;  ///< component for derivative_tv

    /// Highest derivative order the functional reads.
    int order(const IndexSet& index) const { return kind == Functional::derivative_tv ? index[slot].degree() : 0; }
};

inline double evaluate_functional(const FunctionalSpec& phi, const Point& x, const VectorMeasure& lambda,
                                  const MultiIndex* component = nullptr)
{
    switch (phi.kind) {
    case Functional::constant: return 1.0;
    case Functional::state: return x(0);
    case Functional::posterior_mean: {
        const GridPtr& g = lambda.grid();
        return lambda.density(0).cwiseProduct(g->weights()).dot(g->points().row(0).transpose());
    }
    case Functional::derivative_tv: return tv_norm(lambda.component(*component));
    }
    return 0.0;
}

enum class Chain { aligned, shifted };

struct InitialCondition {
    Point x;
    Observation y;
    VectorMeasure lambda;
};

struct ErgodicityProbe {
    Chain chain = Chain::aligned;
    FunctionalSpec phi;
    std::vector<int> horizon;                         ///< 0..n_max
    std::vector<std::vector<MeanEstimate>> estimate;  ///< [z][n]
    std::vector<double> spread;                       ///< max_z - min_z of the means, per n
    LineFit spread_fit;                               ///< log spread against n, n >= 1
    int replicas = 0;
};

/**
 * Monte-Carlo estimates of (Pi^n Phi)(z) or (Pi~^n Phi)(z). Replica r uses the
 * same random stream for every z, so differences across z are coupled.
 * Only the components Phi reads are propagated: lower components of F never
 * depend on higher ones.
 */
inline ErgodicityProbe ergodicity_experiment(const StateSpaceModel& model, const Parameter& theta,
                                             const FunctionalSpec& phi, const std::vector<InitialCondition>& zs,
                                             int n_max, int replicas, std::uint64_t seed, Chain chain,
                                             const Parameter* truth = nullptr)
{
    if (replicas < 2 || zs.empty() || n_max < 1) {
        throw std::invalid_argument("ergodicity_experiment: need replicas >= 2, n_max >= 1 and initial conditions");
    }
    const Parameter& gen = truth ? *truth : theta;
    const auto full = zs.front().lambda.index_set();
    MultiIndex component = (*full)[phi.slot];
    const auto index = enumerate(full->dimension(), phi.order(*full));
    const auto kernel = model.bind(theta);
    const char* label = chain == Chain::aligned ? "ergodicity/aligned" : "ergodicity/shifted";

    ErgodicityProbe probe;
    probe.chain = chain;
    probe.phi = phi;
    probe.replicas = replicas;
    for (int n = 0; n <= n_max; ++n) {
        probe.horizon.push_back(n);
    }
    const auto nz = zs.size();
    const auto nh = static_cast<std::size_t>(n_max) + 1;
    std::vector<std::vector<std::vector<double>>> samples(
        nz, std::vector<std::vector<double>>(nh, std::vector<double>(static_cast<std::size_t>(replicas))));

    for (int r = 0; r < replicas; ++r) {
        const std::uint64_t stream = derive_seed(seed, label, static_cast<std::uint64_t>(r));
        for (std::size_t z = 0; z < nz; ++z) {
            Rng rng(stream);
            Point x = zs[z].x;
            Observation y = zs[z].y;
            VectorMeasure lambda = restrict_to(zs[z].lambda, index);
            const auto rr = static_cast<std::size_t>(r);
            samples[z][0][rr] = evaluate_functional(phi, x, lambda, &component);
            for (int n = 1; n <= n_max; ++n) {
                if (chain == Chain::shifted) {
                    lambda = filter_step_full(*kernel->at(y), lambda, n).next;
                }
                x = model.sample_transition(gen, x, rng);
                y = model.sample_observation(gen, x, rng);
                if (chain == Chain::aligned) {
                    lambda = filter_step_full(*kernel->at(y), lambda, n).next;
                }
                samples[z][static_cast<std::size_t>(n)][rr] = evaluate_functional(phi, x, lambda, &component);
            }
        }
    }

    probe.estimate.assign(nz, std::vector<MeanEstimate>(nh));
    std::vector<double> xs, ys;
    for (std::size_t n = 0; n < nh; ++n) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t z = 0; z < nz; ++z) {
            probe.estimate[z][n] = mean_and_se(samples[z][n]);
            lo = std::min(lo, probe.estimate[z][n].mean);
            hi = std::max(hi, probe.estimate[z][n].mean);
        }
        probe.spread.push_back(hi - lo);
        if (n >= 1 && hi - lo > 0.0) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(hi - lo));
        }
    }
    if (xs.size() >= 2) {
        probe.spread_fit = fit_line(xs, ys);
    }
    return probe;
}

// ---------------------------------------------------------------- derivative sweeps

struct SweepOptions {
    FDScheme scheme;
    double rel_tol = 1e-4;
    double abs_floor = 1e-6;
    int order = -1;  ///< default: the model's maximum order
};

/// Cell masses of P^{0:n}(lambda) as a function of theta.
inline std::function<Eigen::VectorXd(const Eigen::VectorXd&)> filter_masses_fn(
    const StateSpaceModel& model, const std::vector<Observation>& observations, const GridMeasure& lambda)
{
    return [&model, &observations, lambda](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        const Parameter theta = model.parameter(t);
        auto index = model.index_set(0);
        const FilterState s = filter_iterate(model, theta, observations, embed(lambda, index, 1e-10));
        return s.lambda.density(0).cwiseProduct(model.grid()->weights());
    };
}

/// log q^n_theta(y_{1:n} | lambda) as a function of theta.
inline std::function<double(const Eigen::VectorXd&)> loglik_fn(const StateSpaceModel& model,
                                                               const std::vector<Observation>& observations,
                                                               const GridMeasure& lambda)
{
    return [&model, &observations, lambda](const Eigen::VectorXd& t) -> double {
        return loglik_jet(model, model.parameter(t), observations, lambda, 0).values(0);
    };
}

/// Error of a recursion value against a finite-difference reference, scaled so that <= rel_tol passes.
inline double scaled_error(double value, double reference, double rel_tol, double abs_floor)
{
    return std::abs(value - reference) / std::max(std::abs(reference), abs_floor / rel_tol);
}

/**
 * F^{alpha,0:n}(B | E_lambda) against finite differences of P^{0:n}(B | lambda)
 * for every grid cell B, every theta and every alpha up to the order.
 */
inline ExperimentReport derivative_identity_sweep(const StateSpaceModel& model, const std::vector<Parameter>& thetas,
                                                  const std::vector<Observation>& observations,
                                                  const GridMeasure& lambda, const SweepOptions& opts)
{
    ExperimentReport report;
    report.experiment = "check-derivs";
    report.columns = {"theta_index", "theta", "alpha", "max_abs_error", "max_scaled_error", "max_reference"};
    const auto index = model.index_set(opts.order);
    const auto masses = filter_masses_fn(model, observations, lambda);
    double worst = 0.0;
    double worst_abs = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const Parameter& theta = thetas[k];
        const FilterState s = filter_iterate(model, theta, observations, embed(lambda, index, 1e-10));
        std::ostringstream tlabel;
        for (int i = 0; i < theta.dimension(); ++i) {
            tlabel << (i ? " " : "") << format_double(theta[i]);
        }
        for (int a = 0; a < index->size(); ++a) {
            const MultiIndex& alpha = (*index)[a];
            const Eigen::VectorXd value = s.lambda.density(a).cwiseProduct(model.grid()->weights());
            const Eigen::VectorXd ref = a == 0 ? value
                                               : fd_derivative<Eigen::VectorXd>(masses, alpha, theta.theta(),
                                                                                opts.scheme, &model.parameter_box());
            double max_abs = 0.0, max_scaled = 0.0;
            for (Eigen::Index i = 0; i < value.size(); ++i) {
                max_abs = std::max(max_abs, std::abs(value(i) - ref(i)));
                max_scaled = std::max(max_scaled, scaled_error(value(i), ref(i), opts.rel_tol, opts.abs_floor));
            }
            worst = std::max(worst, max_scaled);
            worst_abs = std::max(worst_abs, max_abs);
            report.add_row({static_cast<std::int64_t>(k), tlabel.str(), multiindex_label(alpha), max_abs, max_scaled,
                            ref.cwiseAbs().maxCoeff()});
        }
    }
    report.add_check(make_check("max_scaled_identity_error", worst, "<=", opts.rel_tol));
    report.notes.push_back("max_abs_identity_error " + format_double(worst_abs));
    return report;
}

/// Log-likelihood jet slots against finite differences of slot 0.
inline ExperimentReport loglik_derivative_sweep(const StateSpaceModel& model, const std::vector<Parameter>& thetas,
                                                const std::vector<Observation>& observations,
                                                const GridMeasure& lambda, const SweepOptions& opts)
{
    ExperimentReport report;
    report.experiment = "loglik-derivs";
    report.columns = {"theta_index", "theta", "alpha", "jet", "finite_difference", "scaled_error"};
    const auto f = loglik_fn(model, observations, lambda);
    double worst = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const Parameter& theta = thetas[k];
        const LogLikJet jet = loglik_jet(model, theta, observations, lambda, opts.order);
        std::ostringstream tlabel;
        for (int i = 0; i < theta.dimension(); ++i) {
            tlabel << (i ? " " : "") << format_double(theta[i]);
        }
        for (int a = 0; a < jet.index->size(); ++a) {
            const MultiIndex& alpha = (*jet.index)[a];
            const double ref = a == 0 ? f(theta.theta())
                                      : fd_derivative<double>(f, alpha, theta.theta(), opts.scheme,
                                                              &model.parameter_box());
            const double err = scaled_error(jet.values(a), ref, opts.rel_tol, opts.abs_floor);
            worst = std::max(worst, err);
            report.add_row({static_cast<std::int64_t>(k), tlabel.str(), multiindex_label(alpha), jet.values(a), ref, err});
        }
    }
    report.add_check(make_check("max_scaled_loglik_error", worst, "<=", opts.rel_tol));
    return report;
}

}  // namespace ofjet
