#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/error.hpp"
#include "ofjet/grid.hpp"
#include "ofjet/model.hpp"
#include "ofjet/multiindex.hpp"
#include "ofjet/random.hpp"

namespace ofjet {

enum class Basis { one, identity, tanh, sin, cos, square };

inline double eval_basis(Basis b, double x)
{
    switch (b) {
    case Basis::one: return 1.0;
    case Basis::identity: return x;
    case Basis::tanh: return std::tanh(x);
    case Basis::sin: return std::sin(x);
    case Basis::cos: return std::cos(x);
    case Basis::square: return x * x;
    }
    return 0.0;
}

inline const char* basis_name(Basis b)
{
    switch (b) {
    case Basis::one: return "one";
    case Basis::identity: return "identity";
    case Basis::tanh: return "tanh";
    case Basis::sin: return "sin";
    case Basis::cos: return "cos";
    case Basis::square: return "square";
    }
    return "?";
}

inline std::optional<Basis> parse_basis(const std::string& name)
{
    for (Basis b : {Basis::one, Basis::identity, Basis::tanh, Basis::sin, Basis::cos, Basis::square}) {
        if (name == basis_name(b)) {
            return b;
        }
    }
    return std::nullopt;
}

/// One summand coefficient * theta_parameter * basis(x_input) of output coordinate `output`.
/// parameter = -1 marks a theta-free offset.
struct LinearTerm {
    int parameter = -1;
    int output = 0;
    int input = 0;
    Basis basis = Basis::identity;
    double coefficient = 1.0;

    friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

/**
 * Truncated nonlinear Gaussian model
 *
 *   X_{n+1} = A_theta(X_n) + B U_n,   Y_n = C_theta(X_n) + D V_n,
 *
 * with A, C linear in theta over fixed basis functions, diagonal constant
 * gains B, D, standard Gaussian U, V, and both densities truncated to the
 * state box (and optionally to an observation box) and renormalized.
 */
struct GaussianModelConfig {
    std::string name = "tanh_linear";
    int parameters = 2;
    int max_order = 2;
    ParameterBox theta_box{{-1.5, -1.5}, {1.5, 1.5}};
    Box state_box{{-3.0}, {3.0}};
    std::vector<int> state_cells{64};
    std::vector<double> transition_scale{0.5};
    std::vector<double> observation_scale{0.7};
    std::vector<LinearTerm> drift{{0, 0, 0, Basis::tanh, 1.0}};
    std::vector<LinearTerm> observation{{1, 0, 0, Basis::identity, 1.0}};
    bool compact_observations = true;
    Box observation_box{{-6.0}, {6.0}};
    int observation_cells = 1200;  ///< per axis, quadrature for the observation normalizer

    int state_dim() const { return state_box.dimension(); }
    int observation_dim() const { return static_cast<int>(observation_scale.size()); }

    friend bool operator==(const GaussianModelConfig&, const GaussianModelConfig&) = default;
};

/// Default instance: A = theta_1 tanh(x), B = 0.5, C = theta_2 x, D = 0.7 on X = [-3, 3].
inline GaussianModelConfig tanh_linear_config() { return {}; }

inline GaussianModelConfig linear_gaussian_config()
{
    GaussianModelConfig c;
    c.name = "linear_gaussian";
    c.drift = {{0, 0, 0, Basis::identity, 1.0}};
    return c;
}

/// 2-D state, scalar observation of theta_2 (x_1 + x_2).
inline GaussianModelConfig tanh_linear_2d_config()
{
    GaussianModelConfig c;
    c.name = "tanh_linear_2d";
    c.state_box = Box{{-3.0, -3.0}, {3.0, 3.0}};
    c.state_cells = {16, 16};
    c.transition_scale = {0.5, 0.5};
    c.drift = {{0, 0, 0, Basis::tanh, 1.0}, {0, 1, 1, Basis::tanh, 1.0}};
    c.observation = {{1, 0, 0, Basis::identity, 1.0}, {1, 0, 1, Basis::identity, 1.0}};
    return c;
}

namespace detail {

/// For each slot alpha != 0: alpha = base + e_j with j the first nonzero coordinate,
/// plus the terms (i, base_i, slot of base - e_i) of the Appell recursion.
struct HermitePlan {
    struct Step {
        int j = 0;
        int base = 0;
        std::vector<std::tuple<int, int, int>> lower;
    };
    std::vector<Step> steps;

    explicit HermitePlan(const IndexSet& index)
    {
        steps.resize(static_cast<std::size_t>(index.size()));
        const int d = index.dimension();
        for (int s = 1; s < index.size(); ++s) {
            const MultiIndex& alpha = index[s];
            const MultiIndex e = e_selector(alpha);
            int j = 0;
            while (e[j] == 0) {
                ++j;
            }
            const MultiIndex base = alpha - e;
            Step step;
            step.j = j;
            step.base = index.slot(base);
            for (int i = 0; i < d; ++i) {
                if (base[i] >= 1) {
                    step.lower.emplace_back(i, base[i], index.slot(base - MultiIndex::unit(d, i)));
                }
            }
            steps[static_cast<std::size_t>(s)] = std::move(step);
        }
    }
};

/**
 * Ratios d^alpha phi(U(theta)) / phi(U(theta)) for a standard Gaussian
 * density composed with U(theta) = U0 - G theta. With g = G^T U and
 * H = G^T G these are multivariate Hermite polynomials:
 *   h_{alpha + e_j} = g_j h_alpha - sum_i alpha_i H_ij h_{alpha - e_i}.
 */
inline void hermite_ratios(const HermitePlan& plan, const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                           Eigen::Ref<Eigen::VectorXd> out)
{
    out(0) = 1.0;
    for (std::size_t s = 1; s < plan.steps.size(); ++s) {
        const auto& step = plan.steps[s];
        double v = g(step.j) * out(step.base);
        for (const auto& [i, count, slot] : step.lower) {
            v -= count * H(i, step.j) * out(slot);
        }
        out(static_cast<Eigen::Index>(s)) = v;
    }
}

/// Ratios d^alpha (v / vbar) / (v / vbar) from numerator ratios h and normalizer ratios nb
/// (quotient rule solved degree by degree).
inline void quotient_ratios(const IndexSet& index, const Eigen::Ref<const Eigen::VectorXd>& h,
                            const Eigen::Ref<const Eigen::VectorXd>& nb, Eigen::Ref<Eigen::VectorXd> out)
{
    out(0) = 1.0;
    for (int s = 1; s < index.size(); ++s) {
        double v = h(s);
        for (const auto& t : index.lower_set(s)) {
            if (t.beta == s) {
                continue;
            }
            v -= static_cast<double>(t.weight) * out(t.beta) * nb(t.complement);
        }
        out(s) = v;
    }
}

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace detail

class TruncatedGaussianModel final : public StateSpaceModel {
public:
    explicit TruncatedGaussianModel(GaussianModelConfig config)
        : config_(std::move(config)),
          grid_(std::make_shared<const StateGrid>(config_.state_box, config_.state_cells)),
          index_(enumerate(config_.parameters, config_.max_order)),
          plan_(*index_)
    {
        validate();
        if (config_.compact_observations) {
            std::vector<int> cells(static_cast<std::size_t>(config_.observation_dim()), config_.observation_cells);
            obs_grid_ = std::make_shared<const StateGrid>(config_.observation_box, cells);
        }
    }

    const GaussianModelConfig& config() const { return config_; }

    ModelDims dims() const override
    {
        return {config_.parameters, config_.state_dim(), config_.observation_dim(), config_.max_order};
    }
    const GridPtr& grid() const override { return grid_; }
    const ParameterBox& parameter_box() const override { return config_.theta_box; }
    std::optional<Box> observation_box() const override
    {
        if (config_.compact_observations) {
            return config_.observation_box;
        }
        return std::nullopt;
    }

    double transition_derivative(const MultiIndex& alpha, const Parameter& theta, const Point& x_next,
                                 const Point& x_prev) const override
    {
        check(alpha, theta);
        const Column col = transition_column(theta, x_prev);
        if (!config_.state_box.contains(x_next)) {
            return 0.0;
        }
        Eigen::VectorXd h(index_->size()), rho(index_->size());
        const double u = col.ratios_at(x_next, plan_, h);
        detail::quotient_ratios(*index_, h, col.normalizer_ratios, rho);
        return u / col.normalizer * rho(index_->slot(alpha));
    }

    double observation_derivative(const MultiIndex& alpha, const Parameter& theta, const Observation& y,
                                  const Point& x) const override
    {
        check(alpha, theta);
        const Column col = observation_column(theta, x);
        if (config_.compact_observations && !config_.observation_box.contains(y)) {
            return 0.0;
        }
        Eigen::VectorXd h(index_->size()), rho(index_->size());
        const double v = col.ratios_at(y, plan_, h);
        detail::quotient_ratios(*index_, h, col.normalizer_ratios, rho);
        return v / col.normalizer * rho(index_->slot(alpha));
    }

    double kernel_score(const MultiIndex& alpha, const Parameter& theta, const Observation& y, const Point& x_next,
                        const Point& x_prev) const override
    {
        check(alpha, theta);
        if (!config_.state_box.contains(x_next) ||
            (config_.compact_observations && !config_.observation_box.contains(y))) {
            throw NumericalError("kernel_score: kernel vanishes outside the truncation domain");
        }
        const int m = index_->size();
        Eigen::VectorXd h(m), rho_p(m), rho_q(m);
        const Column tcol = transition_column(theta, x_prev);
        tcol.ratios_at(x_next, plan_, h);
        detail::quotient_ratios(*index_, h, tcol.normalizer_ratios, rho_p);
        const Column ocol = observation_column(theta, x_next);
        ocol.ratios_at(y, plan_, h);
        detail::quotient_ratios(*index_, h, ocol.normalizer_ratios, rho_q);
        const int s = index_->slot(alpha);
        double out = 0.0;
        for (const auto& t : index_->lower_set(s)) {
            out += static_cast<double>(t.weight) * rho_q(t.beta) * rho_p(t.complement);
        }
        return out;
    }

    Eigen::VectorXd observation_scores(const Parameter& theta, const Observation& y, const Point& x) const override
    {
        check(theta);
        if (config_.compact_observations && !config_.observation_box.contains(y)) {
            throw NumericalError("observation_scores: y outside the observation box");
        }
        const Column col = observation_column(theta, x);
        Eigen::VectorXd h(index_->size()), rho(index_->size());
        col.ratios_at(y, plan_, h);
        detail::quotient_ratios(*index_, h, col.normalizer_ratios, rho);
        return rho;
    }

    Eigen::MatrixXd transition_matrix(const MultiIndex& alpha, const Parameter& theta) const override
    {
        check(alpha, theta);
        const int n = grid_->size();
        const int slot = index_->slot(alpha);
        Eigen::MatrixXd m(n, n);
        Eigen::VectorXd h(index_->size()), rho(index_->size());
        for (int j = 0; j < n; ++j) {
            const Column col = transition_column(theta, grid_->point(j));
            for (int i = 0; i < n; ++i) {
                const double u = col.ratios_at(grid_->point(i), plan_, h);
                detail::quotient_ratios(*index_, h, col.normalizer_ratios, rho);
                m(i, j) = u / col.normalizer * rho(slot);
            }
        }
        return m;
    }

    Point sample_transition(const Parameter& theta, const Point& x, Rng& rng) const override
    {
        check(theta);
        const Eigen::VectorXd mean = evaluate_mean(config_.drift, theta.theta(), x, config_.state_dim());
        Point out(config_.state_dim());
        for (int k = 0; k < config_.state_dim(); ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double b = config_.transition_scale[kk];
            const double lo = (config_.state_box.lower[kk] - mean(k)) / b;
            const double hi = (config_.state_box.upper[kk] - mean(k)) / b;
            out(k) = std::clamp(mean(k) + b * rng.truncated_normal(lo, hi), config_.state_box.lower[kk],
                                config_.state_box.upper[kk]);
        }
        return out;
    }

    Observation sample_observation(const Parameter& theta, const Point& x, Rng& rng) const override
    {
        check(theta);
        const int dy = config_.observation_dim();
        const Eigen::VectorXd mean = evaluate_mean(config_.observation, theta.theta(), x, dy);
        Observation y(dy);
        constexpr int max_tries = 1000000;
        for (int attempt = 0; attempt < max_tries; ++attempt) {
            for (int k = 0; k < dy; ++k) {
                y(k) = mean(k) + config_.observation_scale[static_cast<std::size_t>(k)] * rng.normal();
            }
            if (!config_.compact_observations || config_.observation_box.contains(y)) {
                return y;
            }
        }
        throw NumericalError("sample_observation: rejection sampler failed to hit the observation box");
    }

    std::shared_ptr<const BoundKernel> bind(const Parameter& theta) const override;

private:
    /// theta-only data attached to one conditioning point: the Gaussian mean,
    /// its theta-Jacobian scaled by the gains, and the truncation normalizer
    /// with its derivative ratios.
    struct Column {
        Eigen::VectorXd mean;
        Eigen::VectorXd scale;
        Eigen::MatrixXd G;  ///< dim x d, d mean_k / d theta_i divided by scale_k
        Eigen::MatrixXd H;  ///< G^T G
        double normalizer = 1.0;
        Eigen::VectorXd normalizer_ratios;

        /// Gaussian value at z and its derivative ratios h.
        double ratios_at(const Eigen::VectorXd& z, const detail::HermitePlan& plan, Eigen::Ref<Eigen::VectorXd> h) const
        {
            const Eigen::VectorXd u = (z - mean).cwiseQuotient(scale);
            double value = 1.0;
            for (Eigen::Index k = 0; k < u.size(); ++k) {
                value *= detail::std_normal_pdf(u(k));
            }
            const Eigen::VectorXd g = G.transpose() * u;
            detail::hermite_ratios(plan, g, H, h);
            return value;
        }
    };

    void validate() const
    {
        const int dx = config_.state_dim();
        const int dy = config_.observation_dim();
        if (config_.parameters < 1) {
            throw std::invalid_argument("model: need at least one parameter");
        }
        if (config_.max_order < 0 || config_.max_order > 3) {
            throw std::invalid_argument("model: max_order must be in 0..3");
        }
        if (config_.theta_box.dimension() != config_.parameters ||
            static_cast<int>(config_.theta_box.upper.size()) != config_.parameters) {
            throw std::invalid_argument("model: Theta box dimension does not match the parameter count");
        }
        if (static_cast<int>(config_.transition_scale.size()) != dx) {
            throw std::invalid_argument("model: transition scale must have one entry per state axis");
        }
        if (dy < 1 || dy > 2) {
            throw std::invalid_argument("model: observation dimension must be 1 or 2");
        }
        for (double b : config_.transition_scale) {
            if (!(b > 0.0)) {
                throw NumericalError("model: transition gain B is not invertible");
            }
        }
        for (double s : config_.observation_scale) {
            if (!(s > 0.0)) {
                throw NumericalError("model: observation gain D is not invertible");
            }
        }
        auto check_terms = [&](const std::vector<LinearTerm>& terms, int out_dim, const char* what) {
            for (const auto& t : terms) {
                if (t.parameter < -1 || t.parameter >= config_.parameters || t.output < 0 || t.output >= out_dim ||
                    t.input < 0 || t.input >= dx) {
                    throw std::invalid_argument(std::string("model: malformed ") + what + " term");
                }
            }
        };
        check_terms(config_.drift, dx, "drift");
        check_terms(config_.observation, dy, "observation");
        if (config_.compact_observations &&
            (config_.observation_box.dimension() != dy || config_.observation_cells < 1)) {
            throw std::invalid_argument("model: observation box does not match the observation dimension");
        }
    }

    static Eigen::VectorXd evaluate_mean(const std::vector<LinearTerm>& terms, const Eigen::VectorXd& theta,
                                         const Point& x, int out_dim)
    {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(out_dim);
        for (const auto& t : terms) {
            const double f = t.coefficient * eval_basis(t.basis, x(t.input));
            mean(t.output) += t.parameter < 0 ? f : f * theta(t.parameter);
        }
        return mean;
    }

    Column make_column(const std::vector<LinearTerm>& terms, const std::vector<double>& scale, const Parameter& theta,
                       const Point& x) const
    {
        const int dim = static_cast<int>(scale.size());
        Column c;
        c.mean = evaluate_mean(terms, theta.theta(), x, dim);
        c.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), dim);
        c.G = Eigen::MatrixXd::Zero(dim, config_.parameters);
        for (const auto& t : terms) {
            if (t.parameter >= 0) {
                c.G(t.output, t.parameter) += t.coefficient * eval_basis(t.basis, x(t.input));
            }
        }
        for (int k = 0; k < dim; ++k) {
            c.G.row(k) /= c.scale(k);
        }
        c.H = c.G.transpose() * c.G;
        c.normalizer_ratios = Eigen::VectorXd::Zero(index_->size());
        c.normalizer_ratios(0) = 1.0;
        return c;
    }

    /// Fill normalizer and its ratios by quadrature of the untruncated density over `quad`.
    void integrate(Column& c, const StateGrid& quad) const
    {
        const int m = index_->size();
        Eigen::VectorXd h(m);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
        for (int i = 0; i < quad.size(); ++i) {
            const double u = c.ratios_at(quad.point(i), plan_, h);
            acc += (quad.weights()(i) * u) * h;
        }
        if (!(acc(0) > 0.0)) {
            throw NumericalError("model: truncation normalizer vanished");
        }
        c.normalizer = acc(0);
        c.normalizer_ratios = acc / acc(0);
    }

    Column transition_column(const Parameter& theta, const Point& x) const
    {
        Column c = make_column(config_.drift, config_.transition_scale, theta, x);
        integrate(c, *grid_);
        return c;
    }

    Column observation_column(const Parameter& theta, const Point& x) const
    {
        Column c = make_column(config_.observation, config_.observation_scale, theta, x);
        if (obs_grid_) {
            integrate(c, *obs_grid_);
        } else {
            // integral of prod_k phi((y_k - m_k) / s_k) over R^{d_y}; theta-free
            c.normalizer = c.scale.prod();
        }
        return c;
    }

    friend class GaussianBoundKernel;
    friend class GaussianStepKernel;

    GaussianModelConfig config_;
    GridPtr grid_;
    GridPtr obs_grid_;
    std::shared_ptr<const IndexSet> index_;
    detail::HermitePlan plan_;
};

class GaussianStepKernel final : public StepKernel {
public:
    GaussianStepKernel(const TruncatedGaussianModel& model, std::shared_ptr<const std::vector<Eigen::MatrixXd>> transition,
                       Eigen::MatrixXd observation)
        : model_(model), transition_(std::move(transition)), observation_(std::move(observation))
    {
    }

    Eigen::MatrixXd matrix(const MultiIndex& alpha) const override
    {
        const IndexSet& index = *model_.index_;
        if (alpha.dimension() != index.dimension() || alpha.degree() > index.order()) {
            throw std::invalid_argument("kernel matrix: derivative order exceeds the model's maximum order");
        }
        const int s = index.slot(alpha);
        const int n = static_cast<int>(observation_.rows());
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
        for (const auto& t : index.lower_set(s)) {
            k.noalias() += static_cast<double>(t.weight) * observation_.col(t.beta).asDiagonal() *
                           (*transition_)[static_cast<std::size_t>(t.complement)];
        }
        return k;
    }

private:
    const TruncatedGaussianModel& model_;
    std::shared_ptr<const std::vector<Eigen::MatrixXd>> transition_;
    Eigen::MatrixXd observation_;  ///< n x d(p): d^beta q(y | x_i)
};

class GaussianBoundKernel final : public BoundKernel {
public:
    GaussianBoundKernel(const TruncatedGaussianModel& model, const Parameter& theta) : model_(model)
    {
        const StateGrid& grid = *model.grid_;
        const int n = grid.size();
        const int m = model.index_->size();
        auto transition = std::make_shared<std::vector<Eigen::MatrixXd>>(static_cast<std::size_t>(m),
                                                                        Eigen::MatrixXd(n, n));
        Eigen::VectorXd h(m), rho(m);
        for (int j = 0; j < n; ++j) {
            const auto col = model.transition_column(theta, grid.point(j));
            for (int i = 0; i < n; ++i) {
                const double p = col.ratios_at(grid.point(i), model.plan_, h) / col.normalizer;
                detail::quotient_ratios(*model.index_, h, col.normalizer_ratios, rho);
                for (int s = 0; s < m; ++s) {
                    (*transition)[static_cast<std::size_t>(s)](i, j) = p * rho(s);
                }
            }
        }
        transition_ = std::move(transition);
        rows_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            rows_.push_back(model.observation_column(theta, grid.point(i)));
        }
    }

    std::unique_ptr<StepKernel> at(const Observation& y) const override
    {
        const int n = static_cast<int>(rows_.size());
        const int m = model_.index_->size();
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, m);
        const auto& cfg = model_.config_;
        if (y.size() != cfg.observation_dim()) {
            throw std::invalid_argument("kernel: observation has the wrong dimension");
        }
        if (!cfg.compact_observations || cfg.observation_box.contains(y)) {
            Eigen::VectorXd h(m), rho(m);
            for (int i = 0; i < n; ++i) {
                const auto& row = rows_[static_cast<std::size_t>(i)];
                const double v = row.ratios_at(y, model_.plan_, h) / row.normalizer;
                detail::quotient_ratios(*model_.index_, h, row.normalizer_ratios, rho);
                q.row(i) = v * rho.transpose();
            }
        }
        return std::make_unique<GaussianStepKernel>(model_, transition_, std::move(q));
    }

private:
    const TruncatedGaussianModel& model_;
    std::shared_ptr<const std::vector<Eigen::MatrixXd>> transition_;
    std::vector<TruncatedGaussianModel::Column> rows_;
};

inline std::shared_ptr<const BoundKernel> TruncatedGaussianModel::bind(const Parameter& theta) const
{
    check(theta);
    return std::make_shared<GaussianBoundKernel>(*this, theta);
}

inline std::shared_ptr<const TruncatedGaussianModel> make_gaussian_model(GaussianModelConfig config)
{
    return std::make_shared<const TruncatedGaussianModel>(std::move(config));
}

}  // namespace ofjet
