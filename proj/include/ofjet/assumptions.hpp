#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ofjet/error.hpp"
#include "ofjet/model.hpp"
#include "ofjet/stats.hpp"

namespace ofjet {

/**
 * Grid estimates of the mixing and score constants of a model. For a compact
 * observation box (eps1, K1) bound p, q and their derivatives; otherwise
 * (eps2, K2) bound p and K3 bounds q and its relative derivatives
 * against (1 + |y|)^{2|alpha|}.
 */
struct AssumptionConstants {
    bool compact = true;
    double eps_kernel = 0.0;   ///< eps1 (compact) or eps2 (Gaussian tails)
    double k_kernel = 1.0;     ///< K1 or K2
    double k_observation = 1.0;  ///< K3, Gaussian tails only
    double epsilon = 0.0;      ///< mixing constant of the joint kernel
    double c1 = 0.0;           ///< closed-form score bound constant
    double min_kernel = 0.0;   ///< smallest r_theta(y, x' | x) on the grid
    std::vector<Observation> y;
    std::vector<double> psi;   ///< psi-hat(y) per sample
    double psi_uniform = 0.0;  ///< max over samples
    LineFit growth;            ///< log psi-hat against log(1 + |y|); Gaussian tails only
};

inline AssumptionConstants assumption_constants(const StateSpaceModel& model, const std::vector<Parameter>& thetas,
                                                const std::vector<Observation>& ys)
{
    if (thetas.empty() || ys.empty()) {
        throw std::invalid_argument("assumption_constants: empty sample set");
    }
    const auto index = model.index_set();
    const int m = index->size();
    const GridPtr& grid = model.grid();
    const int n = grid->size();
    AssumptionConstants out;
    out.compact = model.observation_box().has_value();
    out.y = ys;
    out.psi.assign(ys.size(), 1.0);
    double eps = std::numeric_limits<double>::infinity();
    double k_kernel = 1.0;
    double k_obs = 1.0;
    double min_r = std::numeric_limits<double>::infinity();

    for (const auto& theta : thetas) {
        std::vector<Eigen::MatrixXd> p;
        p.reserve(static_cast<std::size_t>(m));
        for (int s = 0; s < m; ++s) {
            p.push_back(model.transition_matrix((*index)[s], theta));
            k_kernel = std::max(k_kernel, p.back().cwiseAbs().maxCoeff());
        }
        const double p_min = p[0].minCoeff();
        if (!(p_min > 0.0)) {
            throw NumericalError("assumption_constants: transition density vanishes on the grid");
        }
        eps = std::min(eps, p_min);
        std::vector<Eigen::MatrixXd> p_score(static_cast<std::size_t>(m));
        for (int s = 0; s < m; ++s) {
            p_score[static_cast<std::size_t>(s)] = p[static_cast<std::size_t>(s)].cwiseQuotient(p[0]);
        }

        for (std::size_t k = 0; k < ys.size(); ++k) {
            const Observation& y = ys[k];
            const double ynorm = y.norm();
            Eigen::MatrixXd q_score(n, m);
            Eigen::VectorXd q0(n);
            const MultiIndex zero = (*index)[0];
            for (int i = 0; i < n; ++i) {
                q_score.row(i) = model.observation_scores(theta, y, grid->point(i)).transpose();
                q0(i) = model.observation_derivative(zero, theta, y, grid->point(i));
            }
            if (out.compact) {
                if (!(q0.minCoeff() > 0.0)) {
                    throw NumericalError("assumption_constants: observation density vanishes on the grid");
                }
                eps = std::min(eps, q0.minCoeff());
                for (int s = 0; s < m; ++s) {
                    k_kernel = std::max(k_kernel, q_score.col(s).cwiseProduct(q0).cwiseAbs().maxCoeff());
                }
            } else {
                k_obs = std::max(k_obs, q0.maxCoeff());
                for (int s = 1; s < m; ++s) {
                    const double scale = std::pow(1.0 + ynorm, 2 * (*index)[s].degree());
                    k_obs = std::max(k_obs, q_score.col(s).cwiseAbs().maxCoeff() / scale);
                }
            }
            min_r = std::min(min_r, (q0.asDiagonal() * p[0]).minCoeff());

            double psi = 1.0;
            for (int s = 1; s < m; ++s) {
                Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
                for (const auto& t : index->lower_set(s)) {
                    r += static_cast<double>(t.weight) * q_score.col(t.beta).asDiagonal() *
                         p_score[static_cast<std::size_t>(t.complement)];
                }
                psi = std::max(psi, r.cwiseAbs().maxCoeff());
            }
            out.psi[k] = std::max(out.psi[k], psi);
        }
    }

    out.eps_kernel = eps;
    out.k_kernel = k_kernel;
    out.k_observation = k_obs;
    out.min_kernel = min_r;
    if (out.compact) {
        out.epsilon = std::min(eps * eps, 1.0 / (k_kernel * k_kernel));
        out.c1 = 2.0 * k_kernel * k_kernel / (eps * eps);
    } else {
        out.epsilon = std::min(eps, 1.0 / k_kernel);
        out.c1 = 2.0 * k_kernel * k_obs / (eps * eps);
    }
    out.psi_uniform = *std::max_element(out.psi.begin(), out.psi.end());
    if (!out.compact && ys.size() >= 2) {
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < ys.size(); ++k) {
            lx.push_back(std::log1p(ys[k].norm()));
            ly.push_back(std::log(out.psi[k]));
        }
        out.growth = fit_line(lx, ly);
    }
    return out;
}

}  // namespace ofjet
