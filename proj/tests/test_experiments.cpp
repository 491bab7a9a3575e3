#include <sstream>

#include <gtest/gtest.h>

#include "ofjet/assumptions.hpp"
#include "ofjet/experiments.hpp"
#include "ofjet/oracle.hpp"
#include "ofjet/report.hpp"
#include "ofjet/stats.hpp"
#include "support.hpp"

using namespace ofjet;
using ofjet::testing::small_model;

TEST(Stats, ExactLine)
{
    const LineFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
    EXPECT_EQ(f.points, 4);
    EXPECT_THROW(fit_line({1.0}, {2.0}), std::invalid_argument);
}

TEST(Stats, MeanAndStandardError)
{
    const MeanEstimate m = mean_and_se({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Report, CsvAndSummary)
{
    ExperimentReport r;
    r.experiment = "demo";
    r.columns = {"a", "b", "c"};
    r.add_row({std::int64_t{3}, 0.1, std::string("x,y")});
    r.add_check(make_check("err", 0.5, "<=", 1.0));
    std::ostringstream csv, sum;
    write_csv(csv, r);
    write_summary(sum, r);
    EXPECT_EQ(csv.str(), "a,b,c\n3,0.10000000000000001,\"x,y\"\n");
    EXPECT_NE(sum.str().find("PASS err"), std::string::npos);
    EXPECT_NE(sum.str().find("overall: PASS"), std::string::npos);
    r.add_check(make_check("rate", 1.2, "<", 1.0));
    EXPECT_FALSE(r.passed());
}

TEST(Experiments, RandomL0IsInL0)
{
    const auto model = small_model(16);
    Rng rng(1);
    for (int k = 0; k < 10; ++k) {
        const VectorMeasure l = random_l0(model->grid(), model->index_set(), rng);
        EXPECT_TRUE(l.in_l0());
    }
}

TEST(Experiments, RandomThetasAreInside)
{
    const ParameterBox box{{-1.0, 0.0}, {1.0, 2.0}};
    Rng rng(2);
    for (const auto& t : random_thetas(box, 50, rng)) {
        EXPECT_TRUE(box.contains(t.theta()));
    }
}

TEST(Experiments, ForgettingDecaysGeometrically)
{
    const auto model = small_model(32);
    const auto theta = model->parameter(Eigen::Vector2d(1.2, 0.4));
    Rng rng(8);
    std::vector<std::pair<VectorMeasure, VectorMeasure>> pairs;
    for (int k = 0; k < 2; ++k) {
        pairs.emplace_back(random_l0(model->grid(), model->index_set(), rng),
                           random_l0(model->grid(), model->index_set(), rng));
    }
    ForgettingOptions opts;
    opts.n_max = 40;
    opts.fit_from = 10;
    opts.seed = 3;
    const auto curves = forgetting_experiment(*model, theta, pairs, opts);
    ASSERT_EQ(curves.size(), 2u);
    for (const auto& c : curves) {
        ASSERT_TRUE(c.fitted);
        EXPECT_LT(c.fit.slope, 0.0);
        EXPECT_LT(c.rate, 1.0);
        EXPECT_LT(c.distance.back(), 1e-2 * c.distance.front());
    }
    const auto again = forgetting_experiment(*model, theta, pairs, opts);
    EXPECT_EQ(again[0].distance, curves[0].distance);
    opts.n_max = 10;
    EXPECT_THROW(forgetting_experiment(*model, theta, pairs, opts), std::invalid_argument);
}

TEST(Experiments, IdenticalPairHasZeroDistance)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    Rng rng(4);
    const VectorMeasure l = random_l0(model->grid(), model->index_set(), rng);
    ForgettingOptions opts;
    opts.n_max = 20;
    const auto curves = forgetting_experiment(*model, theta, {{l, l}}, opts);
    EXPECT_TRUE(curves[0].identical);
    EXPECT_FALSE(curves[0].fitted);
}

TEST(Experiments, FunctionalEvaluation)
{
    const auto model = small_model(16);
    const auto idx = model->index_set();
    const VectorMeasure l = embed(GridMeasure::uniform(model->grid()), idx);
    const Point x = Point::Constant(1, 0.5);
    EXPECT_EQ(evaluate_functional({Functional::constant, 0}, x, l), 1.0);
    EXPECT_EQ(evaluate_functional({Functional::state, 0}, x, l), 0.5);
    EXPECT_NEAR(evaluate_functional({Functional::posterior_mean, 0}, x, l), 0.0, 1e-14);
    const MultiIndex a{1, 0};
    EXPECT_EQ(evaluate_functional({Functional::derivative_tv, 1}, x, l, &a), 0.0);
}

TEST(Experiments, ErgodicityConstantFunctionalHasNoSpread)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto idx = model->index_set();
    Rng rng(3);
    std::vector<InitialCondition> zs;
    for (int k = 0; k < 3; ++k) {
        zs.push_back({model->grid()->point(5 * k), Observation::Constant(1, 0.1 * k),
                      random_l0(model->grid(), idx, rng)});
    }
    const auto probe =
        ergodicity_experiment(*model, theta, {Functional::constant, 0}, zs, 5, 4, 9, Chain::aligned);
    for (double s : probe.spread) {
        EXPECT_EQ(s, 0.0);
    }
}

TEST(Experiments, ErgodicitySpreadShrinks)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto idx = model->index_set();
    std::vector<InitialCondition> zs;
    for (int j : {0, 15}) {
        zs.push_back({model->grid()->point(j), Observation::Constant(1, 0.0),
                      embed(GridMeasure::point_mass(model->grid(), j), idx)});
    }
    for (Chain chain : {Chain::aligned, Chain::shifted}) {
        const auto probe =
            ergodicity_experiment(*model, theta, {Functional::posterior_mean, 0}, zs, 30, 50, 11, chain);
        ASSERT_EQ(probe.spread.size(), 31u);
        EXPECT_GT(probe.spread[1], 10.0 * probe.spread[30]);
        const auto again =
            ergodicity_experiment(*model, theta, {Functional::posterior_mean, 0}, zs, 30, 50, 11, chain);
        EXPECT_EQ(again.spread, probe.spread);
    }
}

TEST(Experiments, ScaledError)
{
    EXPECT_NEAR(scaled_error(1.0001, 1.0, 1e-4, 1e-6), 1e-4, 1e-12);
    EXPECT_NEAR(scaled_error(1e-7, 0.0, 1e-4, 1e-6), 1e-5, 1e-18);
}

TEST(Assumptions, GaussianScoreGrowsPolynomially)
{
    const auto model = small_model(16, false);
    std::vector<Parameter> thetas = {model->parameter(Eigen::Vector2d(0.8, 1.0))};
    std::vector<Observation> ys;
    for (double y = 100.0; y <= 1e4; y *= 1.6) {
        ys.push_back(Observation::Constant(1, y));
    }
    const AssumptionConstants a = assumption_constants(*model, thetas, ys);
    EXPECT_FALSE(a.compact);
    EXPECT_NEAR(a.growth.slope, 2.0, 0.2);
    EXPECT_GT(a.epsilon, 0.0);
}

TEST(Experiments, PointMassesAtOppositeEndsAreForgotten)
{
    const auto model = small_model(64);
    const auto theta = model->parameter(Eigen::Vector2d(1.2, 0.4));
    const auto idx = model->index_set();
    const VectorMeasure a = embed(GridMeasure::point_mass(model->grid(), 0), idx);
    const VectorMeasure b = embed(GridMeasure::point_mass(model->grid(), 63), idx);
    ForgettingOptions opts;
    opts.seed = 12;
    const auto curves = forgetting_experiment(*model, theta, {{a, b}}, opts);
    ASSERT_TRUE(curves[0].fitted);
    EXPECT_LT(curves[0].rate, 1.0);
    EXPECT_GE(curves[0].fit.r_squared, 0.9);
}

TEST(Experiments, DerivativeOnlyDifferenceDecays)
{
    const auto model = small_model(64);
    const auto theta = model->parameter(Eigen::Vector2d(1.2, 0.4));
    const auto idx = model->index_set();
    Rng rng(6);
    const VectorMeasure a = random_l0(model->grid(), idx, rng);
    VectorMeasure b = a;
    b.density(1) = random_l0(model->grid(), idx, rng).density(1);
    ForgettingOptions opts;
    opts.seed = 5;
    const auto c = forgetting_experiment(*model, theta, {{a, b}}, opts)[0];
    ASSERT_GT(c.distance[0], 0.0);
    ASSERT_TRUE(c.fitted);
    EXPECT_LT(c.fit.slope, 0.0);
    EXPECT_GE(c.fit.r_squared, 0.9);
    EXPECT_LT(c.distance.back(), 1e-4 * c.distance[10]);
}

TEST(Experiments, StateFunctionalDecaysLikeTheSpectralGap)
{
    const auto model = small_model(64);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto idx = model->index_set(0);
    std::vector<InitialCondition> zs;
    for (int j : {0, 32, 63}) {
        zs.push_back({model->grid()->point(j), Observation::Constant(1, 0.0),
                      embed(GridMeasure::point_mass(model->grid(), j), idx)});
    }
    const auto probe = ergodicity_experiment(*model, theta, {Functional::state, 0}, zs, 12, 400, 21, Chain::aligned);
    std::vector<double> xs, ys;
    for (int n = 1; n <= 12; ++n) {
        xs.push_back(n);
        ys.push_back(std::log(probe.spread[static_cast<std::size_t>(n)]));
    }
    const double rate = std::exp(fit_line(xs, ys).slope);
    const double delta = stationary_law(*model, theta).second_eigenvalue;
    EXPECT_GT(rate, 0.5 * delta);
    EXPECT_LT(rate, 2.0 * delta);
}
