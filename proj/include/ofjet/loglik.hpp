#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/filter.hpp"
#include "ofjet/grid.hpp"
#include "ofjet/model.hpp"
#include "ofjet/multiindex.hpp"
#include "ofjet/random.hpp"

namespace ofjet {

/// Psi^0 = log <R^0(lambda_0)>.
inline double psi_zero(const StepKernel& kernel, const VectorMeasure& lambda)
{
    const GridMeasure r = apply_R(kernel, MultiIndex::zero(lambda.index_set()->dimension()), lambda.component(0));
    const double z = r.total_mass();
    if (!(z >= kMassFloor) || !std::isfinite(z)) {
        throw NumericalError("psi_zero: predictive mass is not positive");
    }
    return std::log(z);
}

inline double psi_zero(const StateSpaceModel& model, const Parameter& theta, const Observation& y,
                       const VectorMeasure& lambda)
{
    require_same_grid(model.grid(), lambda.grid());
    model.check(theta);
    return psi_zero(*model.bind(theta)->at(y), lambda);
}

inline double psi_alpha(const StepKernel& kernel, const MultiIndex& alpha, const VectorMeasure& lambda)
{
    if (alpha.is_zero()) {
        throw std::invalid_argument("psi_alpha: alpha must be nonzero (use psi_zero)");
    }
    const int slot = lambda.index_set()->slot(alpha);
    return filter_step_full(kernel, lambda).psi(slot);
}

inline double psi_alpha(const StateSpaceModel& model, const MultiIndex& alpha, const Parameter& theta,
                        const Observation& y, const VectorMeasure& lambda)
{
    require_same_grid(model.grid(), lambda.grid());
    model.check(alpha, theta);
    return psi_alpha(*model.bind(theta)->at(y), alpha, lambda);
}

/// log q^n_theta(y_{1:n} | lambda) in slot 0 and its theta-derivatives in the other slots.
struct LogLikJet {
    std::shared_ptr<const IndexSet> index;
    Eigen::VectorXd values;
    std::vector<Eigen::VectorXd> increments;  ///< per-step Psi vectors when history is kept

    double operator[](const MultiIndex& alpha) const { return values(index->slot(alpha)); }
    double log_likelihood() const { return values(0); }
};

inline LogLikJet loglik_jet(const BoundKernel& kernel, std::shared_ptr<const IndexSet> index,
                            const std::vector<Observation>& observations, const GridMeasure& lambda0,
                            bool keep_history = false)
{
    if (observations.empty()) {
        throw std::invalid_argument("loglik_jet: need at least one observation");
    }
    LogLikJet jet{index, Eigen::VectorXd::Zero(index->size()), {}};
    VectorMeasure lambda = embed(lambda0, index, 1e-10);
    int step = 0;
    for (const auto& y : observations) {
        StepResult r = filter_step_full(*kernel.at(y), lambda, ++step);
        jet.values += r.psi;
        if (keep_history) {
            jet.increments.push_back(r.psi);
        }
        lambda = std::move(r.next);
    }
    return jet;
}

inline LogLikJet loglik_jet(const StateSpaceModel& model, const Parameter& theta,
                            const std::vector<Observation>& observations, const GridMeasure& lambda0,
                            int order = -1, bool keep_history = false)
{
    require_same_grid(model.grid(), lambda0.grid());
    model.check(theta);
    return loglik_jet(*model.bind(theta), model.index_set(order), observations, lambda0, keep_history);
}

/// Monte-Carlo mean and standard error of jet / n over replicated trajectories.
struct RateEstimate {
    std::shared_ptr<const IndexSet> index;
    Eigen::VectorXd mean;
    Eigen::VectorXd standard_error;
    int n = 0;
    int replicas = 0;
};

/**
 * l_n(theta, lambda0) and its derivatives. Trajectories are drawn at `truth`
 * (theta if null) with X_0 ~ `start` (lambda0 if null).
 */
inline RateEstimate avg_loglik_rate(const StateSpaceModel& model, const Parameter& theta, const GridMeasure& lambda0,
                                    int n, int replicas, std::uint64_t seed, const Parameter* truth = nullptr,
                                    const GridMeasure* start = nullptr, int order = -1)
{
    if (replicas < 2) {
        throw std::invalid_argument("avg_loglik_rate: need at least two replicas");
    }
    const Parameter& gen = truth ? *truth : theta;
    const GridMeasure& init = start ? *start : lambda0;
    auto index = model.index_set(order);
    auto kernel = model.bind(theta);
    Eigen::MatrixXd samples(index->size(), replicas);
    for (int r = 0; r < replicas; ++r) {
        const Trajectory traj = simulate(model, gen, init, n, derive_seed(seed, "loglik", static_cast<std::uint64_t>(r)));
        samples.col(r) = loglik_jet(*kernel, index, traj.observations, lambda0).values / n;
    }
    RateEstimate out;
    out.index = index;
    out.n = n;
    out.replicas = replicas;
    out.mean = samples.rowwise().mean();
    const Eigen::MatrixXd centered = samples.colwise() - out.mean;
    const Eigen::VectorXd var = centered.rowwise().squaredNorm() / (replicas - 1);
    out.standard_error = (var / replicas).cwiseSqrt();
    return out;
}

struct RmlOptions {
    double a = 0.0;  ///< step numerator; step_k = a / (b + k)
    double b = 1.0;
    int n_steps = 1000;
    double margin = 1e-3;  ///< relative distance kept from the boundary of Theta on projection
};

struct RmlTrace {
    std::vector<Eigen::VectorXd> theta;  ///< theta_0 .. theta_n
    std::vector<int> projections;        ///< steps at which theta was projected back into Theta
};

/**
 * Online gradient ascent on the log-likelihood: the filter jet is carried
 * across steps while theta moves, and the first-order Psi increments are the
 * gradient estimate. Observations come from `observations`.
 */
inline RmlTrace rml_demo(const StateSpaceModel& model, const Parameter& theta_init, const GridMeasure& lambda0,
                         const std::vector<Observation>& observations, const RmlOptions& opts)
{
    if (model.dims().max_order < 1) {
        throw std::invalid_argument("rml_demo: model must provide first derivatives");
    }
    if (static_cast<int>(observations.size()) < opts.n_steps) {
        throw std::invalid_argument("rml_demo: fewer observations than steps");
    }
    const int d = model.dims().parameters;
    auto index = model.index_set(1);
    const ParameterBox& box = model.parameter_box();
    RmlTrace trace;
    trace.theta.reserve(static_cast<std::size_t>(opts.n_steps) + 1);
    Eigen::VectorXd theta = theta_init.theta();
    trace.theta.push_back(theta);
    VectorMeasure lambda = embed(lambda0, index, 1e-10);
    for (int k = 0; k < opts.n_steps; ++k) {
        const Parameter current = model.parameter(theta);
        StepResult r = filter_step_full(*model.bind(current)->at(observations[static_cast<std::size_t>(k)]), lambda, k + 1);
        lambda = std::move(r.next);
        const double gain = opts.a / (opts.b + k);
        if (gain != 0.0) {
            bool projected = false;
            for (int i = 0; i < d; ++i) {
                theta(i) += gain * r.psi(i + 1);
                const auto ii = static_cast<std::size_t>(i);
                const double span = box.upper[ii] - box.lower[ii];
                const double lo = box.lower[ii] + opts.margin * span;
                const double hi = box.upper[ii] - opts.margin * span;
                if (!(theta(i) >= lo && theta(i) <= hi)) {
                    theta(i) = std::isnan(theta(i)) ? 0.5 * (lo + hi) : std::clamp(theta(i), lo, hi);
                    projected = true;
                }
            }
            if (projected) {
                trace.projections.push_back(k + 1);
            }
        }
        trace.theta.push_back(theta);
    }
    return trace;
}

}  // namespace ofjet
