#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/error.hpp"
#include "ofjet/multiindex.hpp"

namespace ofjet {

using Point = Eigen::VectorXd;

/// Axis-aligned box [lower_k, upper_k] in R^k.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    int dimension() const { return static_cast<int>(lower.size()); }

    double volume() const
    {
        double v = 1.0;
        for (int k = 0; k < dimension(); ++k) {
            v *= upper[static_cast<std::size_t>(k)] - lower[static_cast<std::size_t>(k)];
        }
        return v;
    }

    bool contains(const Point& x) const
    {
        for (int k = 0; k < dimension(); ++k) {
            if (x(k) < lower[static_cast<std::size_t>(k)] || x(k) > upper[static_cast<std::size_t>(k)]) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const Box&, const Box&) = default;
};

/**
 * Midpoint-rule discretization of a compact box. Point i is the centre of
 * cell i and its weight is the cell volume, so sum(weights) = volume of the box.
 * In 2-D, index = i0 + n0 * i1.
 */
class StateGrid {
public:
    StateGrid(Box bounds, std::vector<int> cells) : bounds_(std::move(bounds)), cells_(std::move(cells))
    {
        const int dim = bounds_.dimension();
        if (dim < 1 || dim > 2) {
            throw std::invalid_argument("StateGrid: only 1-D and 2-D boxes are supported");
        }
        if (static_cast<int>(bounds_.upper.size()) != dim || static_cast<int>(cells_.size()) != dim) {
            throw std::invalid_argument("StateGrid: bounds and cell counts disagree in dimension");
        }
        int n = 1;
        for (int k = 0; k < dim; ++k) {
            if (!(bounds_.upper[static_cast<std::size_t>(k)] > bounds_.lower[static_cast<std::size_t>(k)])) {
                throw std::invalid_argument("StateGrid: empty box");
            }
            if (cells_[static_cast<std::size_t>(k)] < 1) {
                throw std::invalid_argument("StateGrid: need at least one cell per axis");
            }
            n *= cells_[static_cast<std::size_t>(k)];
        }
        points_.resize(dim, n);
        weights_.resize(n);
        std::vector<double> step(static_cast<std::size_t>(dim));
        double cell_volume = 1.0;
        for (int k = 0; k < dim; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            step[kk] = (bounds_.upper[kk] - bounds_.lower[kk]) / cells_[kk];
            cell_volume *= step[kk];
        }
        for (int i = 0; i < n; ++i) {
            int rest = i;
            for (int k = 0; k < dim; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                const int ik = rest % cells_[kk];
                rest /= cells_[kk];
                points_(k, i) = bounds_.lower[kk] + (ik + 0.5) * step[kk];
            }
            weights_(i) = cell_volume;
        }
        step_ = std::move(step);
    }

    /// Uniform 1-D grid on [lower, upper] with n cells.
    static std::shared_ptr<const StateGrid> line(double lower, double upper, int n)
    {
        return std::make_shared<const StateGrid>(Box{{lower}, {upper}}, std::vector<int>{n});
    }

    int size() const { return static_cast<int>(weights_.size()); }
    int dimension() const { return bounds_.dimension(); }
    const Box& bounds() const { return bounds_; }
    const std::vector<int>& cells() const { return cells_; }

    /// dimension x size matrix of cell centres.
    const Eigen::MatrixXd& points() const { return points_; }
    Point point(int i) const { return points_.col(i); }
    const Eigen::VectorXd& weights() const { return weights_; }
    double total_measure() const { return weights_.sum(); }

    /// Index of the cell containing x (points on the boundary go to the nearest cell).
    int locate(const Point& x) const
    {
        int index = 0;
        int stride = 1;
        for (int k = 0; k < dimension(); ++k) {
            const auto kk = static_cast<std::size_t>(k);
            int ik = static_cast<int>(std::floor((x(k) - bounds_.lower[kk]) / step_[kk]));
            ik = std::clamp(ik, 0, cells_[kk] - 1);
            index += ik * stride;
            stride *= cells_[kk];
        }
        return index;
    }

    friend bool operator==(const StateGrid& a, const StateGrid& b)
    {
        return a.bounds_ == b.bounds_ && a.cells_ == b.cells_;
    }

private:
    Box bounds_;
    std::vector<int> cells_;
    std::vector<double> step_;
    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const StateGrid>;

inline bool same_grid(const GridPtr& a, const GridPtr& b)
{
    return a == b || (a && b && *a == *b);
}

inline void require_same_grid(const GridPtr& a, const GridPtr& b)
{
    if (!same_grid(a, b)) {
        throw MismatchError("measures live on different grids");
    }
}

/// Finite signed measure on the grid, stored as its density against the quadrature.
class GridMeasure {
public:
    GridMeasure(GridPtr grid, Eigen::VectorXd density) : grid_(std::move(grid)), density_(std::move(density))
    {
        if (!grid_ || density_.size() != grid_->size()) {
            throw std::invalid_argument("GridMeasure: density length does not match the grid");
        }
    }

    static GridMeasure zero(GridPtr grid)
    {
        const int n = grid->size();
        return GridMeasure(std::move(grid), Eigen::VectorXd::Zero(n));
    }

    static GridMeasure uniform(GridPtr grid)
    {
        const double total = grid->total_measure();
        const int n = grid->size();
        return GridMeasure(std::move(grid), Eigen::VectorXd::Constant(n, 1.0 / total));
    }

    /// Unit point mass at grid point j.
    static GridMeasure point_mass(GridPtr grid, int j)
    {
        Eigen::VectorXd density = Eigen::VectorXd::Zero(grid->size());
        density(j) = 1.0 / grid->weights()(j);
        return GridMeasure(std::move(grid), std::move(density));
    }

    /// Measure with the given cell masses.
    static GridMeasure from_masses(GridPtr grid, const Eigen::VectorXd& masses)
    {
        Eigen::VectorXd density = masses.cwiseQuotient(grid->weights());
        return GridMeasure(std::move(grid), std::move(density));
    }

    const GridPtr& grid() const { return grid_; }
    const Eigen::VectorXd& density() const { return density_; }
    Eigen::VectorXd& density() { return density_; }

    /// Cell masses density_i * weight_i.
    Eigen::VectorXd masses() const { return density_.cwiseProduct(grid_->weights()); }

    double total_mass() const { return density_.dot(grid_->weights()); }

    bool is_probability(double tol = 1e-12) const
    {
        return density_.minCoeff() >= 0.0 && std::abs(total_mass() - 1.0) <= tol;
    }

    GridMeasure& operator+=(const GridMeasure& o)
    {
        require_same_grid(grid_, o.grid_);
        density_ += o.density_;
        return *this;
    }
    GridMeasure& operator-=(const GridMeasure& o)
    {
        require_same_grid(grid_, o.grid_);
        density_ -= o.density_;
        return *this;
    }
    GridMeasure& operator*=(double a)
    {
        density_ *= a;
        return *this;
    }
    friend GridMeasure operator+(GridMeasure a, const GridMeasure& b) { return a += b; }
    friend GridMeasure operator-(GridMeasure a, const GridMeasure& b) { return a -= b; }
    friend GridMeasure operator*(double s, GridMeasure a) { return a *= s; }

private:
    GridPtr grid_;
    Eigen::VectorXd density_;
};

inline double total_mass(const GridMeasure& m) { return m.total_mass(); }

inline double tv_norm(const GridMeasure& m) { return m.density().cwiseAbs().dot(m.grid()->weights()); }

/**
 * d(p) grid measures indexed by multi-indices of an IndexSet. Densities are
 * held column-wise: column s is the component at IndexSet slot s.
 */
class VectorMeasure {
public:
    VectorMeasure(GridPtr grid, std::shared_ptr<const IndexSet> index, Eigen::MatrixXd densities)
        : grid_(std::move(grid)), index_(std::move(index)), densities_(std::move(densities))
    {
        if (!grid_ || !index_) {
            throw std::invalid_argument("VectorMeasure: null grid or index set");
        }
        if (densities_.rows() != grid_->size() || densities_.cols() != index_->size()) {
            throw std::invalid_argument("VectorMeasure: density block has the wrong shape");
        }
    }

    static VectorMeasure zero(GridPtr grid, std::shared_ptr<const IndexSet> index)
    {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(grid->size(), index->size());
        return VectorMeasure(std::move(grid), std::move(index), std::move(d));
    }

    const GridPtr& grid() const { return grid_; }
    const std::shared_ptr<const IndexSet>& index_set() const { return index_; }
    int components() const { return index_->size(); }

    const Eigen::MatrixXd& densities() const { return densities_; }
    Eigen::MatrixXd& densities() { return densities_; }

    auto density(int slot) const { return densities_.col(slot); }
    auto density(int slot) { return densities_.col(slot); }

    GridMeasure component(int slot) const { return GridMeasure(grid_, densities_.col(slot)); }
    GridMeasure component(const MultiIndex& alpha) const { return component(index_->slot(alpha)); }

    void set_component(int slot, const GridMeasure& m)
    {
        require_same_grid(grid_, m.grid());
        densities_.col(slot) = m.density();
    }

    double mass(int slot) const { return densities_.col(slot).dot(grid_->weights()); }

    /// Component zero is a probability measure (the L_0 condition).
    bool in_l0(double tol = 1e-10) const { return component(0).is_probability(tol); }

private:
    GridPtr grid_;
    std::shared_ptr<const IndexSet> index_;
    Eigen::MatrixXd densities_;
};

/// Total variation norm induced by the l-infinity vector norm: max over components.
inline double vector_norm(const VectorMeasure& v)
{
    const Eigen::VectorXd tv = v.densities().cwiseAbs().transpose() * v.grid()->weights();
    return tv.maxCoeff();
}

/// Probability lambda in slot zero, zero measures elsewhere.
inline VectorMeasure embed(const GridMeasure& lambda, std::shared_ptr<const IndexSet> index, double tol = 1e-12)
{
    if (!lambda.is_probability(tol)) {
        throw std::invalid_argument("embed: lambda is not a probability measure");
    }
    VectorMeasure out = VectorMeasure::zero(lambda.grid(), std::move(index));
    out.density(0) = lambda.density();
    return out;
}

inline double measure_distance(const VectorMeasure& a, const VectorMeasure& b)
{
    require_same_grid(a.grid(), b.grid());
    if (a.index_set()->size() != b.index_set()->size() || a.index_set()->dimension() != b.index_set()->dimension()) {
        throw MismatchError("measure_distance: index sets differ");
    }
    const Eigen::VectorXd tv = (a.densities() - b.densities()).cwiseAbs().transpose() * a.grid()->weights();
    return tv.maxCoeff();
}

}  // namespace ofjet
