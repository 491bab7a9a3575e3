#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/error.hpp"
#include "ofjet/grid.hpp"
#include "ofjet/model.hpp"
#include "ofjet/multiindex.hpp"

namespace ofjet {

inline constexpr int kOracleMaxSteps = 6;
inline constexpr int kOracleMaxPoints = 16;

namespace detail {

inline void oracle_guard(const StateSpaceModel& model, std::size_t steps)
{
    if (static_cast<int>(steps) > kOracleMaxSteps || model.grid()->size() > kOracleMaxPoints) {
        throw std::length_error("oracle: at most 6 steps on at most 16 grid points");
    }
}

/// Unnormalized r^{m:n}(x | lambda) as cell masses, by nested sums over every path.
inline Eigen::VectorXd path_sum(const StateSpaceModel& model, const Parameter& theta,
                                const std::vector<Observation>& observations, const GridMeasure& lambda)
{
    const StateGrid& grid = *model.grid();
    const int n = grid.size();
    std::vector<Eigen::MatrixXd> kernels;
    kernels.reserve(observations.size());
    const MultiIndex zero = MultiIndex::zero(model.dims().parameters);
    for (const auto& y : observations) {
        Eigen::MatrixXd k(n, n);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                k(i, j) = model.kernel_derivative(zero, theta, y, grid.point(i), grid.point(j));
            }
        }
        kernels.push_back(std::move(k));
    }
    const Eigen::VectorXd& w = grid.weights();
    Eigen::VectorXd masses = Eigen::VectorXd::Zero(n);
    const int steps = static_cast<int>(observations.size());
    std::vector<int> path(static_cast<std::size_t>(steps) + 1, 0);
    // odometer over x_0 .. x_steps
    while (true) {
        double v = lambda.density()(path[0]) * w(path[0]);
        for (int k = 0; k < steps; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            v *= kernels[kk](path[kk + 1], path[kk]) * w(path[kk + 1]);
        }
        masses(path.back()) += v;
        int c = 0;
        while (c <= steps && ++path[static_cast<std::size_t>(c)] == n) {
            path[static_cast<std::size_t>(c)] = 0;
            ++c;
        }
        if (c > steps) {
            break;
        }
    }
    return masses;
}

}  // namespace detail

/// P^{m:n}(lambda) by brute force, normalized once at the end.
inline GridMeasure oracle_filter(const StateSpaceModel& model, const Parameter& theta,
                                 const std::vector<Observation>& observations, const GridMeasure& lambda)
{
    detail::oracle_guard(model, observations.size());
    require_same_grid(model.grid(), lambda.grid());
    model.check(theta);
    const Eigen::VectorXd masses = detail::path_sum(model, theta, observations, lambda);
    const double total = masses.sum();
    if (!(total > 0.0)) {
        throw NumericalError("oracle_filter: path sum vanished");
    }
    return GridMeasure::from_masses(model.grid(), masses / total);
}

/// log q^n_theta(y_{1:n} | lambda) by brute force.
inline double oracle_log_likelihood(const StateSpaceModel& model, const Parameter& theta,
                                    const std::vector<Observation>& observations, const GridMeasure& lambda)
{
    detail::oracle_guard(model, observations.size());
    require_same_grid(model.grid(), lambda.grid());
    model.check(theta);
    const double total = detail::path_sum(model, theta, observations, lambda).sum();
    if (!(total > 0.0)) {
        throw NumericalError("oracle_log_likelihood: path sum vanished");
    }
    return std::log(total);
}

/// Central-difference scheme: base step h, Richardson levels (1 = plain stencil).
struct FDScheme {
    double h = 1e-3;
    int levels = 2;

    void validate() const
    {
        if (!(h > 0.0) || levels < 1) {
            throw std::invalid_argument("FDScheme: need h > 0 and levels >= 1");
        }
    }
};

namespace detail {

/// Nested central differences of order alpha_i along each coordinate, all with step h.
template <class T>
T fd_stencil(const std::function<T(const Eigen::VectorXd&)>& f, const MultiIndex& alpha, const Eigen::VectorXd& theta,
             double h, int coord)
{
    while (coord < alpha.dimension() && alpha[coord] == 0) {
        ++coord;
    }
    if (coord == alpha.dimension()) {
        return f(theta);
    }
    const int k = alpha[coord];
    std::optional<T> acc;
    for (int j = 0; j <= k; ++j) {
        Eigen::VectorXd shifted = theta;
        shifted(coord) += (0.5 * k - j) * h;
        const double c = ((j % 2) ? -1.0 : 1.0) * static_cast<double>(binomial(k, j)) / std::pow(h, k);
        T term = fd_stencil(f, alpha, shifted, h, coord + 1);
        if (acc) {
            *acc += c * term;
        } else {
            acc = c * term;
        }
    }
    return *acc;
}

}  // namespace detail

/**
 * d^alpha f(theta) by nested central differences with Richardson extrapolation
 * over step halving. T needs T += T, double * T and T - T.
 * `box` bounds the stencil; leaving it is an error.
 */
template <class T>
T fd_derivative(const std::function<T(const Eigen::VectorXd&)>& f, const MultiIndex& alpha,
                const Eigen::VectorXd& theta, const FDScheme& scheme, const ParameterBox* box = nullptr)
{
    scheme.validate();
    if (alpha.dimension() != theta.size()) {
        throw std::invalid_argument("fd_derivative: alpha and theta differ in dimension");
    }
    if (box) {
        for (int i = 0; i < alpha.dimension(); ++i) {
            const double reach = 0.5 * alpha[i] * scheme.h;
            const auto ii = static_cast<std::size_t>(i);
            if (alpha[i] > 0 && !(theta(i) - reach > box->lower[ii] && theta(i) + reach < box->upper[ii])) {
                throw std::domain_error("fd_derivative: stencil leaves Theta");
            }
        }
    }
    if (alpha.is_zero()) {
        return f(theta);
    }
    std::vector<T> table;
    table.reserve(static_cast<std::size_t>(scheme.levels));
    double h = scheme.h;
    for (int l = 0; l < scheme.levels; ++l) {
        table.push_back(detail::fd_stencil<T>(f, alpha, theta, h, 0));
        h *= 0.5;
    }
    // error expands in h^2, h^4, ...
    for (int l = 1; l < scheme.levels; ++l) {
        const double factor = std::pow(4.0, l);
        for (int i = scheme.levels - 1; i >= l; --i) {
            const auto ii = static_cast<std::size_t>(i);
            T diff = table[ii] - table[ii - 1];
            table[ii] += (1.0 / (factor - 1.0)) * diff;
        }
    }
    return table.back();
}

struct StationaryLaw {
    GridMeasure pi;
    double second_eigenvalue = 0.0;  ///< modulus estimate delta
    int iterations = 0;
};

/// Cell-mass transition matrix M_ij = p_theta(x_i | x_j) w_i (column stochastic).
inline Eigen::MatrixXd transition_mass_matrix(const StateSpaceModel& model, const Parameter& theta)
{
    const Eigen::MatrixXd p = model.transition_matrix(MultiIndex::zero(model.dims().parameters), theta);
    return model.grid()->weights().asDiagonal() * p;
}

/// Power iteration for pi = pi P, then for the dominant mode of P - pi 1^T.
inline StationaryLaw stationary_law(const Eigen::MatrixXd& transition, const GridPtr& grid, int max_iter = 100000)
{
    const int n = static_cast<int>(transition.rows());
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::VectorXd next = transition * pi;
        next /= next.sum();
        const double change = (next - pi).cwiseAbs().sum();
        pi = std::move(next);
        if (change < 1e-12) {
            break;
        }
    }
    if (it == max_iter) {
        throw NumericalError("stationary_law: power iteration did not converge");
    }

    // deflated operator D v = M v - pi (1^T v); start from a fixed zero-mass vector
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    v -= pi * v.sum();
    double norm = v.norm();
    double delta = 0.0;
    if (norm > 0.0) {
        v /= norm;
        constexpr int burn = 200;
        constexpr int span = 200;
        double log_growth = 0.0;
        for (int k = 0; k < burn + span; ++k) {
            Eigen::VectorXd next = transition * v;
            next -= pi * next.sum();
            const double g = next.norm();
            if (!(g > 1e-300)) {
                log_growth = -std::numeric_limits<double>::infinity();
                break;
            }
            if (k >= burn) {
                log_growth += std::log(g);
            }
            v = next / g;
        }
        delta = std::exp(log_growth / span);
    }
    return {GridMeasure::from_masses(grid, pi), delta, it + 1};
}

inline StationaryLaw stationary_law(const StateSpaceModel& model, const Parameter& theta, int max_iter = 100000)
{
    model.check(theta);
    return stationary_law(transition_mass_matrix(model, theta), model.grid(), max_iter);
}

}  // namespace ofjet
