#include <gtest/gtest.h>

#include "ofjet/experiments.hpp"
#include "ofjet/loglik.hpp"
#include "ofjet/oracle.hpp"
#include "support.hpp"

using namespace ofjet;
using ofjet::testing::observations;
using ofjet::testing::scalar;
using ofjet::testing::small_model;

TEST(LogLik, PsiZeroIsLogPredictiveMass)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const Observation y = scalar(0.3);
    const GridMeasure l = GridMeasure::uniform(model->grid());
    const double z = total_mass(apply_R(*model, MultiIndex::zero(2), theta, y, l));
    EXPECT_NEAR(psi_zero(*model, theta, y, embed(l, model->index_set())), std::log(z), 1e-14);
}

TEST(LogLik, PsiAlphaFirstOrderIsScoreOfPredictiveMass)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const Observation y = scalar(0.3);
    const VectorMeasure l = embed(GridMeasure::uniform(model->grid()), model->index_set());
    for (int k = 0; k < 2; ++k) {
        const MultiIndex e = MultiIndex::unit(2, k);
        const double expected = total_mass(compute_s(*model, e, theta, y, l));
        EXPECT_NEAR(psi_alpha(*model, e, theta, y, l), expected, 1e-14);
    }
    EXPECT_THROW(psi_alpha(*model, MultiIndex::zero(2), theta, y, l), std::invalid_argument);
}

TEST(LogLik, JetSumsIncrements)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.4, -0.9));
    const auto ys = observations(*model, theta, 6, 2);
    const LogLikJet jet = loglik_jet(*model, theta, ys, GridMeasure::uniform(model->grid()), -1, true);
    ASSERT_EQ(jet.increments.size(), 6u);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(jet.values.size());
    for (const auto& inc : jet.increments) {
        sum += inc;
    }
    EXPECT_LT((sum - jet.values).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(jet[MultiIndex::zero(2)], jet.log_likelihood());
}

TEST(LogLik, MatchesBruteForce)
{
    const auto model = small_model(8);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto ys = observations(*model, theta, 4, 5);
    const GridMeasure l = GridMeasure::point_mass(model->grid(), 2);
    EXPECT_NEAR(loglik_jet(*model, theta, ys, l, 0).log_likelihood(), oracle_log_likelihood(*model, theta, ys, l),
                1e-9);
}

TEST(LogLik, DerivativesMatchFiniteDifferences)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(-0.7, 0.5));
    const auto ys = observations(*model, theta, 10, 6);
    const ExperimentReport rep =
        loglik_derivative_sweep(*model, {theta}, ys, GridMeasure::uniform(model->grid()), SweepOptions{});
    EXPECT_TRUE(rep.passed());
}

TEST(LogLik, EmptyObservationsRejected)
{
    const auto model = small_model(8);
    const auto theta = model->parameter(Eigen::Vector2d(0.1, 0.1));
    EXPECT_THROW(loglik_jet(*model, theta, {}, GridMeasure::uniform(model->grid())), std::invalid_argument);
}

TEST(LogLik, RateEstimateIsSeeded)
{
    const auto model = small_model(12);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const GridMeasure l = GridMeasure::uniform(model->grid());
    const RateEstimate a = avg_loglik_rate(*model, theta, l, 20, 8, 4);
    const RateEstimate b = avg_loglik_rate(*model, theta, l, 20, 8, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.standard_error, b.standard_error);
    EXPECT_TRUE((a.standard_error.array() > 0.0).all());
    EXPECT_THROW(avg_loglik_rate(*model, theta, l, 20, 1, 4), std::invalid_argument);
}

TEST(LogLik, ScoreHasMeanNearZeroAtTruth)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const GridMeasure l = GridMeasure::uniform(model->grid());
    const RateEstimate r = avg_loglik_rate(*model, theta, l, 30, 60, 17, nullptr, nullptr, 1);
    for (int s = 1; s < r.index->size(); ++s) {
        EXPECT_LT(std::abs(r.mean(s)), 4.0 * r.standard_error(s)) << (*r.index)[s];
    }
}

TEST(Rml, StaysInsideTheBoxAndMoves)
{
    const auto model = small_model(16);
    const auto truth = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto ys = observations(*model, truth, 200, 31);
    RmlOptions opts{0.05, 10.0, 200, 1e-3};
    const RmlTrace tr = rml_demo(*model, model->parameter(Eigen::Vector2d(0.0, 0.3)),
                                 GridMeasure::uniform(model->grid()), ys, opts);
    ASSERT_EQ(tr.theta.size(), 201u);
    for (const auto& t : tr.theta) {
        EXPECT_TRUE(model->parameter_box().contains(t));
    }
    EXPECT_GT((tr.theta.back() - tr.theta.front()).norm(), 1e-3);
    opts.n_steps = 300;
    EXPECT_THROW(rml_demo(*model, truth, GridMeasure::uniform(model->grid()), ys, opts), std::invalid_argument);
}
