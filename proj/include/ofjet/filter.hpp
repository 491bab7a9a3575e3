#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/error.hpp"
#include "ofjet/grid.hpp"
#include "ofjet/model.hpp"
#include "ofjet/multiindex.hpp"

namespace ofjet {

/// Predictive masses below this are treated as an underflowed kernel.
inline constexpr double kMassFloor = 1e-300;

/// R^alpha_{theta,y}(lambda): density at x_i is sum_j K_ij lambda_j w_j.
inline GridMeasure apply_R(const StepKernel& kernel, const MultiIndex& alpha, const GridMeasure& lambda)
{
    const GridPtr& grid = lambda.grid();
    Eigen::VectorXd weighted = lambda.density().cwiseProduct(grid->weights());
    Eigen::MatrixXd k = kernel.matrix(alpha);
    if (k.rows() != grid->size()) {
        throw MismatchError("apply_R: kernel and measure live on different grids");
    }
    return GridMeasure(grid, k * weighted);
}

inline GridMeasure apply_R(const StateSpaceModel& model, const MultiIndex& alpha, const Parameter& theta,
                           const Observation& y, const GridMeasure& lambda)
{
    require_same_grid(model.grid(), lambda.grid());
    model.check(alpha, theta);
    return apply_R(*model.bind(theta)->at(y), alpha, lambda);
}

/// Everything one application of F_{theta,y} produces.
struct StepResult {
    VectorMeasure next;          ///< F_{theta,y}(Lambda)
    double predictive_mass = 0;  ///< <R^0(lambda_0)>
    Eigen::VectorXd s_mass;      ///< <S^gamma(Lambda)> per slot
    Eigen::VectorXd psi;         ///< Psi^0 = log <R^0>, then Psi^alpha per slot
};

namespace detail {

/**
 * Products R^gamma(lambda_beta) for all kernel slots gamma and measure slots beta,
 * as one N x d(p) block per gamma: column beta is the density of R^gamma(lambda_beta).
 */
inline std::vector<Eigen::MatrixXd> kernel_products(const StepKernel& kernel, const VectorMeasure& lambda)
{
    const IndexSet& index = *lambda.index_set();
    const Eigen::MatrixXd weighted = lambda.grid()->weights().asDiagonal() * lambda.densities();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(index.size()));
    for (int g = 0; g < index.size(); ++g) {
        const Eigen::MatrixXd k = kernel.matrix(index[g]);
        if (k.rows() != lambda.grid()->size()) {
            throw MismatchError("filter: kernel and measure live on different grids");
        }
        out.push_back(k * weighted);
    }
    return out;
}

/// Psi^alpha for alpha != 0 from the masses <S^gamma>, in slot order.
inline void psi_recursion(const IndexSet& index, const Eigen::VectorXd& s_mass, Eigen::VectorXd& psi)
{
    for (int a = 1; a < index.size(); ++a) {
        const MultiIndex& alpha = index[a];
        const MultiIndex e = e_selector(alpha);
        const MultiIndex reduced = alpha - e;
        double v = s_mass(a);
        for (const auto& t : index.lower_set(a)) {
            if (t.beta == a || !leq(e, index[t.beta])) {
                continue;
            }
            v -= static_cast<double>(multinomial(reduced, index[t.beta] - e)) * psi(t.beta) * s_mass(t.complement);
        }
        psi(a) = v;
    }
}

}  // namespace detail

/**
 * One step of the derivative filter. Components are produced in slot order,
 * which is nondecreasing in |alpha|, so every f^beta with beta < alpha is ready.
 */
inline StepResult filter_step_full(const StepKernel& kernel, const VectorMeasure& lambda, int step_index = -1)
{
    const IndexSet& index = *lambda.index_set();
    const GridPtr& grid = lambda.grid();
    const int m = index.size();
    const Eigen::VectorXd& w = grid->weights();

    const auto products = detail::kernel_products(kernel, lambda);
    const double z = products[0].col(0).dot(w);
    if (!(z >= kMassFloor) || !std::isfinite(z)) {
        std::ostringstream msg;
        msg << "filter: predictive mass " << z << " is not positive";
        if (step_index >= 0) {
            msg << " at observation " << step_index;
        }
        throw NumericalError(msg.str());
    }

    Eigen::MatrixXd s(grid->size(), m);
    for (int a = 0; a < m; ++a) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid->size());
        for (const auto& t : index.lower_set(a)) {
            acc += static_cast<double>(t.weight) * products[static_cast<std::size_t>(t.complement)].col(t.beta);
        }
        s.col(a) = acc / z;
    }
    Eigen::VectorXd s_mass = s.transpose() * w;

    Eigen::MatrixXd f(grid->size(), m);
    for (int a = 0; a < m; ++a) {
        Eigen::VectorXd acc = s.col(a);
        for (const auto& t : index.lower_set(a)) {
            if (t.beta == a) {
                continue;
            }
            acc -= (static_cast<double>(t.weight) * s_mass(t.complement)) * f.col(t.beta);
        }
        f.col(a) = acc;
    }

    StepResult out{VectorMeasure(grid, lambda.index_set(), std::move(f)), z, std::move(s_mass),
                   Eigen::VectorXd::Zero(m)};
    out.psi(0) = std::log(z);
    detail::psi_recursion(index, out.s_mass, out.psi);
    return out;
}

inline VectorMeasure filter_step(const StepKernel& kernel, const VectorMeasure& lambda)
{
    return filter_step_full(kernel, lambda).next;
}

inline VectorMeasure filter_step(const StateSpaceModel& model, const Parameter& theta, const Observation& y,
                                 const VectorMeasure& lambda)
{
    require_same_grid(model.grid(), lambda.grid());
    model.check(theta);
    return filter_step(*model.bind(theta)->at(y), lambda);
}

/// S^alpha_{theta,y}(Lambda) as a measure.
inline GridMeasure compute_s(const StepKernel& kernel, const MultiIndex& alpha, const VectorMeasure& lambda)
{
    const IndexSet& index = *lambda.index_set();
    const int a = index.slot(alpha);
    const Eigen::VectorXd& w = lambda.grid()->weights();
    const Eigen::VectorXd weighted0 = lambda.density(0).cwiseProduct(w);
    const double z = (kernel.matrix(MultiIndex::zero(index.dimension())) * weighted0).dot(w);
    if (!(z >= kMassFloor) || !std::isfinite(z)) {
        throw NumericalError("compute_s: predictive mass is not positive");
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(lambda.grid()->size());
    for (const auto& t : index.lower_set(a)) {
        const Eigen::VectorXd weighted = lambda.density(t.beta).cwiseProduct(w);
        acc += static_cast<double>(t.weight) * (kernel.matrix(index[t.complement]) * weighted);
    }
    return GridMeasure(lambda.grid(), acc / z);
}

inline GridMeasure compute_s(const StateSpaceModel& model, const MultiIndex& alpha, const Parameter& theta,
                             const Observation& y, const VectorMeasure& lambda)
{
    require_same_grid(model.grid(), lambda.grid());
    model.check(alpha, theta);
    return compute_s(*model.bind(theta)->at(y), alpha, lambda);
}

/// F^{m:n}(Lambda_0) and where it came from.
struct FilterState {
    VectorMeasure lambda;
    int step = 0;
    int origin = 0;
    std::vector<VectorMeasure> history;  ///< F^{m:m}, ..., F^{m:n} when requested
};

struct IterateOptions {
    bool keep_history = false;
    bool check_masses = true;
    double mass_tol = 1e-10;
};

inline void check_mass_invariants(const VectorMeasure& lambda, double tol, int step)
{
    for (int a = 0; a < lambda.components(); ++a) {
        const double target = a == 0 ? 1.0 : 0.0;
        const double mass = lambda.mass(a);
        if (!(std::abs(mass - target) <= tol)) {
            std::ostringstream msg;
            msg << "filter: component " << (*lambda.index_set())[a] << " has mass " << mass << " after step " << step;
            throw NumericalError(msg.str());
        }
    }
}

/// Folds F_{theta,y} over observations with a pre-bound kernel.
inline FilterState filter_iterate(const BoundKernel& kernel, const std::vector<Observation>& observations,
                                  const VectorMeasure& lambda0, IterateOptions opts = {}, int origin = 0)
{
    FilterState state{lambda0, origin, origin, {}};
    if (opts.keep_history) {
        state.history.reserve(observations.size() + 1);
        state.history.push_back(lambda0);
    }
    for (const auto& y : observations) {
        StepResult r = filter_step_full(*kernel.at(y), state.lambda, state.step + 1);
        state.lambda = std::move(r.next);
        ++state.step;
        if (opts.check_masses) {
            check_mass_invariants(state.lambda, opts.mass_tol, state.step);
        }
        if (opts.keep_history) {
            state.history.push_back(state.lambda);
        }
    }
    return state;
}

inline FilterState filter_iterate(const StateSpaceModel& model, const Parameter& theta,
                                  const std::vector<Observation>& observations, const VectorMeasure& lambda0,
                                  IterateOptions opts = {}, int origin = 0)
{
    require_same_grid(model.grid(), lambda0.grid());
    model.check(theta);
    if (lambda0.index_set()->dimension() != model.dims().parameters ||
        lambda0.index_set()->order() > model.dims().max_order) {
        throw MismatchError("filter_iterate: index set does not fit the model");
    }
    return filter_iterate(*model.bind(theta), observations, lambda0, opts, origin);
}

}  // namespace ofjet
