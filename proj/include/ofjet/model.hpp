#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/error.hpp"
#include "ofjet/grid.hpp"
#include "ofjet/multiindex.hpp"
#include "ofjet/random.hpp"

namespace ofjet {

using Observation = Eigen::VectorXd;

/// Open box Theta of admissible parameters.
struct ParameterBox {
    std::vector<double> lower;
    std::vector<double> upper;

    int dimension() const { return static_cast<int>(lower.size()); }

    bool contains(const Eigen::VectorXd& theta) const
    {
        if (theta.size() != dimension()) {
            return false;
        }
        for (int i = 0; i < dimension(); ++i) {
            const auto ii = static_cast<std::size_t>(i);
            if (!(theta(i) > lower[ii] && theta(i) < upper[ii])) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const ParameterBox&, const ParameterBox&) = default;
};

/// A point strictly inside Theta.
class Parameter {
public:
    Parameter(Eigen::VectorXd theta, ParameterBox box) : theta_(std::move(theta)), box_(std::move(box))
    {
        if (!box_.contains(theta_)) {
            std::ostringstream msg;
            msg << "Parameter: theta = [" << theta_.transpose() << "] is not inside Theta";
            throw std::domain_error(msg.str());
        }
    }

    const Eigen::VectorXd& theta() const { return theta_; }
    double operator[](int i) const { return theta_(i); }
    int dimension() const { return static_cast<int>(theta_.size()); }
    const ParameterBox& box() const { return box_; }

    /// Same box, new coordinates.
    Parameter moved_to(Eigen::VectorXd theta) const { return Parameter(std::move(theta), box_); }

private:
    Eigen::VectorXd theta_;
    ParameterBox box_;
};

struct ModelDims {
    int parameters = 0;   ///< d
    int state = 1;        ///< d_x
    int observation = 1;  ///< d_y
    int max_order = 2;    ///< p
};

/// Kernel matrices for one (theta, y): entry (i, j) = d^alpha r_theta(y, x_i | x_j).
class StepKernel {
public:
    virtual ~StepKernel() = default;
    virtual Eigen::MatrixXd matrix(const MultiIndex& alpha) const = 0;
};

/// Theta-dependent part of the kernel, reused across observations.
class BoundKernel {
public:
    virtual ~BoundKernel() = default;
    virtual std::unique_ptr<StepKernel> at(const Observation& y) const = 0;
};

/**
 * Parametric state-space model on a grid-discretized compact state space.
 * The joint kernel is r_theta(y, x' | x) = q_theta(y | x') p_theta(x' | x);
 * implementations supply both factors and their theta-derivatives up to
 * order dims().max_order, and samplers for the dynamics.
 */
class StateSpaceModel {
public:
    virtual ~StateSpaceModel() = default;

    virtual ModelDims dims() const = 0;
    virtual const GridPtr& grid() const = 0;
    virtual const ParameterBox& parameter_box() const = 0;

    /// Compact observation domain, or nullopt when Y is all of R^{d_y}.
    virtual std::optional<Box> observation_box() const = 0;

    virtual double transition_derivative(const MultiIndex& alpha, const Parameter& theta, const Point& x_next,
                                         const Point& x_prev) const = 0;
    virtual double observation_derivative(const MultiIndex& alpha, const Parameter& theta, const Observation& y,
                                          const Point& x) const = 0;

    virtual Point sample_transition(const Parameter& theta, const Point& x, Rng& rng) const = 0;
    virtual Observation sample_observation(const Parameter& theta, const Point& x, Rng& rng) const = 0;

    /// d^alpha r_theta(y, x' | x) by the Leibniz rule over the two factors.
    virtual double kernel_derivative(const MultiIndex& alpha, const Parameter& theta, const Observation& y,
                                     const Point& x_next, const Point& x_prev) const
    {
        check(alpha, theta);
        double out = 0.0;
        for_each_lower(alpha, [&](const MultiIndex& beta, std::int64_t weight) {
            out += static_cast<double>(weight) * observation_derivative(beta, theta, y, x_next) *
                   transition_derivative(alpha - beta, theta, x_next, x_prev);
        });
        return out;
    }

    /// d^alpha r / r, the higher-order score of the kernel.
    virtual double kernel_score(const MultiIndex& alpha, const Parameter& theta, const Observation& y,
                                const Point& x_next, const Point& x_prev) const
    {
        const double r = kernel_derivative(MultiIndex::zero(alpha.dimension()), theta, y, x_next, x_prev);
        if (!(r > 0.0)) {
            throw NumericalError("kernel_score: kernel vanishes");
        }
        return kernel_derivative(alpha, theta, y, x_next, x_prev) / r;
    }

    /// d^alpha q_theta(y | x) / q_theta(y | x) for every slot of index_set().
    virtual Eigen::VectorXd observation_scores(const Parameter& theta, const Observation& y, const Point& x) const
    {
        const auto index = index_set();
        const double q0 = observation_derivative((*index)[0], theta, y, x);
        if (!(q0 > 0.0)) {
            throw NumericalError("observation_scores: observation density vanishes");
        }
        Eigen::VectorXd out(index->size());
        for (int s = 0; s < index->size(); ++s) {
            out(s) = observation_derivative((*index)[s], theta, y, x) / q0;
        }
        return out;
    }

    /// N x N matrix of d^alpha p_theta(x_i | x_j) on the model grid.
    virtual Eigen::MatrixXd transition_matrix(const MultiIndex& alpha, const Parameter& theta) const
    {
        check(alpha, theta);
        const StateGrid& g = *grid();
        Eigen::MatrixXd m(g.size(), g.size());
        for (int j = 0; j < g.size(); ++j) {
            const Point xj = g.point(j);
            for (int i = 0; i < g.size(); ++i) {
                m(i, j) = transition_derivative(alpha, theta, g.point(i), xj);
            }
        }
        return m;
    }

    /// Precompute theta-only quantities. The default evaluates kernel_derivative pointwise.
    virtual std::shared_ptr<const BoundKernel> bind(const Parameter& theta) const;

    void check(const MultiIndex& alpha, const Parameter& theta) const
    {
        const ModelDims d = dims();
        if (alpha.dimension() != d.parameters) {
            throw std::invalid_argument("model: multi-index dimension does not match the parameter dimension");
        }
        if (alpha.degree() > d.max_order) {
            throw std::invalid_argument("model: derivative order exceeds the model's maximum order");
        }
        check(theta);
    }

    void check(const Parameter& theta) const
    {
        if (theta.dimension() != dims().parameters || !parameter_box().contains(theta.theta())) {
            throw std::domain_error("model: theta outside Theta");
        }
    }

    Parameter parameter(Eigen::VectorXd theta) const { return Parameter(std::move(theta), parameter_box()); }

    std::shared_ptr<const IndexSet> index_set(int order = -1) const
    {
        const ModelDims d = dims();
        return enumerate(d.parameters, order < 0 ? d.max_order : order);
    }

protected:
    template <class F>
    static void for_each_lower(const MultiIndex& alpha, F&& f)
    {
        std::vector<int> beta(static_cast<std::size_t>(alpha.dimension()), 0);
        for_each_lower_rec(alpha, beta, 0, f);
    }

private:
    template <class F>
    static void for_each_lower_rec(const MultiIndex& alpha, std::vector<int>& beta, int coord, F& f)
    {
        if (coord == alpha.dimension()) {
            MultiIndex b(beta);
            f(b, multinomial(alpha, b));
            return;
        }
        for (int v = 0; v <= alpha[coord]; ++v) {
            beta[static_cast<std::size_t>(coord)] = v;
            for_each_lower_rec(alpha, beta, coord + 1, f);
        }
        beta[static_cast<std::size_t>(coord)] = 0;
    }
};

using ModelPtr = std::shared_ptr<const StateSpaceModel>;

namespace detail {

class PointwiseStepKernel final : public StepKernel {
public:
    PointwiseStepKernel(const StateSpaceModel& model, Parameter theta, Observation y)
        : model_(model), theta_(std::move(theta)), y_(std::move(y))
    {
    }

    Eigen::MatrixXd matrix(const MultiIndex& alpha) const override
    {
        model_.check(alpha, theta_);
        const StateGrid& grid = *model_.grid();
        const int n = grid.size();
        Eigen::MatrixXd k(n, n);
        for (int j = 0; j < n; ++j) {
            const Point xj = grid.point(j);
            for (int i = 0; i < n; ++i) {
                k(i, j) = model_.kernel_derivative(alpha, theta_, y_, grid.point(i), xj);
            }
        }
        return k;
    }

private:
    const StateSpaceModel& model_;
    Parameter theta_;
    Observation y_;
};

class PointwiseBoundKernel final : public BoundKernel {
public:
    PointwiseBoundKernel(const StateSpaceModel& model, Parameter theta) : model_(model), theta_(std::move(theta)) {}

    std::unique_ptr<StepKernel> at(const Observation& y) const override
    {
        return std::make_unique<PointwiseStepKernel>(model_, theta_, y);
    }

private:
    const StateSpaceModel& model_;
    Parameter theta_;
};

}  // namespace detail

inline std::shared_ptr<const BoundKernel> StateSpaceModel::bind(const Parameter& theta) const
{
    check(theta);
    return std::make_shared<detail::PointwiseBoundKernel>(*this, theta);
}

/// N x N matrix of d^alpha r_theta(y, x_i | x_j) on the model grid.
inline Eigen::MatrixXd kernel_matrix(const StateSpaceModel& model, const MultiIndex& alpha, const Parameter& theta,
                                     const Observation& y)
{
    model.check(alpha, theta);
    return model.bind(theta)->at(y)->matrix(alpha);
}

/// X_0..X_n and Y_1..Y_n.
struct Trajectory {
    std::vector<Point> states;
    std::vector<Observation> observations;
    std::uint64_t seed = 0;

    int length() const { return static_cast<int>(observations.size()); }
};

/// Sample the model's Markov dynamics with X_0 drawn from lambda0 on the grid.
inline Trajectory simulate(const StateSpaceModel& model, const Parameter& theta, const GridMeasure& lambda0, int n,
                           std::uint64_t seed)
{
    if (n < 1) {
        throw std::invalid_argument("simulate: n must be >= 1");
    }
    model.check(theta);
    require_same_grid(model.grid(), lambda0.grid());
    Rng rng(seed);
    Trajectory out;
    out.seed = seed;
    out.states.reserve(static_cast<std::size_t>(n) + 1);
    out.observations.reserve(static_cast<std::size_t>(n));
    out.states.push_back(model.grid()->point(rng.categorical(lambda0.masses())));
    for (int k = 0; k < n; ++k) {
        Point next = model.sample_transition(theta, out.states.back(), rng);
        out.observations.push_back(model.sample_observation(theta, next, rng));
        out.states.push_back(std::move(next));
    }
    return out;
}

}  // namespace ofjet
