#include <gtest/gtest.h>

#include "ofjet/experiments.hpp"
#include "ofjet/filter.hpp"
#include "ofjet/stats.hpp"
#include "support.hpp"

using namespace ofjet;
using ofjet::testing::observations;
using ofjet::testing::scalar;
using ofjet::testing::small_model;

TEST(Filter, ZeroOrderIsBayesFilter)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto grid = model->grid();
    const Observation y = scalar(0.7);
    const GridMeasure lambda = GridMeasure::point_mass(grid, 4);
    const VectorMeasure out = filter_step(*model, theta, y, embed(lambda, model->index_set(0)));

    Eigen::VectorXd expected(grid->size());
    for (int i = 0; i < grid->size(); ++i) {
        expected(i) = model->observation_derivative(MultiIndex::zero(2), theta, y, grid->point(i)) *
                      model->transition_derivative(MultiIndex::zero(2), theta, grid->point(i), grid->point(4));
    }
    expected /= expected.dot(grid->weights());
    EXPECT_LT((out.density(0) - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.maxCoeff());
}

TEST(Filter, ComputeSZeroIsNormalizedPrediction)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.3, -0.8));
    const Observation y = scalar(-0.2);
    const VectorMeasure lambda = embed(GridMeasure::uniform(model->grid()), model->index_set());
    const GridMeasure s0 = compute_s(*model, MultiIndex::zero(2), theta, y, lambda);
    const GridMeasure r0 = apply_R(*model, MultiIndex::zero(2), theta, y, lambda.component(0));
    EXPECT_NEAR(total_mass(s0), 1.0, 1e-13);
    EXPECT_LT(tv_norm(s0 - (1.0 / total_mass(r0)) * r0), 1e-13);
    const VectorMeasure next = filter_step(*model, theta, y, lambda);
    EXPECT_LT(tv_norm(next.component(0) - s0), 1e-13);
}

TEST(Filter, MassInvariantsFromRandomL0)
{
    const auto model = small_model(24);
    const auto index = model->index_set();
    Rng rng(99);
    for (int k = 0; k < 50; ++k) {
        const auto thetas = random_thetas(model->parameter_box(), 1, rng);
        const VectorMeasure lambda = random_l0(model->grid(), index, rng);
        const Observation y = model->sample_observation(thetas[0], model->grid()->point(k % 24), rng);
        const VectorMeasure next = filter_step(*model, thetas[0], y, lambda);
        EXPECT_NEAR(next.mass(0), 1.0, 1e-10);
        for (int s = 1; s < index->size(); ++s) {
            EXPECT_NEAR(next.mass(s), 0.0, 1e-10);
        }
        EXPECT_GE(next.density(0).minCoeff(), 0.0);
    }
}

TEST(Filter, IterateComposes)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.8, 1.0));
    const auto ys = observations(*model, theta, 8, 3);
    const VectorMeasure l0 = embed(GridMeasure::uniform(model->grid()), model->index_set());
    const FilterState full = filter_iterate(*model, theta, ys, l0, {true});
    ASSERT_EQ(full.history.size(), 9u);
    EXPECT_EQ(full.step, 8);
    const std::vector<Observation> head(ys.begin(), ys.begin() + 3);
    const std::vector<Observation> tail(ys.begin() + 3, ys.end());
    const FilterState a = filter_iterate(*model, theta, head, l0);
    const FilterState b = filter_iterate(*model, theta, tail, a.lambda, {}, a.step);
    EXPECT_EQ(b.step, 8);
    EXPECT_LT(measure_distance(b.lambda, full.lambda), 1e-13);
    EXPECT_LT(measure_distance(full.history[3], a.lambda), 1e-13);
}

TEST(Filter, LowerOrderComponentsDoNotDependOnHigherOnes)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(-0.5, 0.9));
    const auto ys = observations(*model, theta, 5, 8);
    const GridMeasure l = GridMeasure::uniform(model->grid());
    const FilterState two = filter_iterate(*model, theta, ys, embed(l, model->index_set(2)));
    const FilterState one = filter_iterate(*model, theta, ys, embed(l, model->index_set(1)));
    EXPECT_LT(measure_distance(restrict_to(two.lambda, model->index_set(1)), one.lambda), 1e-14);
}

TEST(Filter, FirstDerivativeMatchesFiniteDifferences)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.6, 0.7));
    const auto ys = observations(*model, theta, 4, 21);
    const GridMeasure l = GridMeasure::uniform(model->grid());
    SweepOptions opts;
    const ExperimentReport rep = derivative_identity_sweep(*model, {theta}, ys, l, opts);
    EXPECT_TRUE(rep.passed());
    EXPECT_FALSE(rep.rows.empty());
}

TEST(Filter, GridMismatchIsRejected)
{
    const auto model = small_model(16);
    const auto other = small_model(8);
    const auto theta = model->parameter(Eigen::Vector2d(0.1, 0.1));
    const VectorMeasure l = embed(GridMeasure::uniform(other->grid()), model->index_set());
    EXPECT_THROW(filter_step(*model, theta, scalar(0.0), l), MismatchError);
    EXPECT_THROW(filter_iterate(*model, theta, {scalar(0.0)}, l), MismatchError);
}

TEST(Filter, IndexSetMustFitTheModel)
{
    const auto model = small_model(8, true, 1);
    const auto theta = model->parameter(Eigen::Vector2d(0.1, 0.1));
    const VectorMeasure l = embed(GridMeasure::uniform(model->grid()), enumerate(2, 2));
    EXPECT_THROW(filter_iterate(*model, theta, {scalar(0.0)}, l), MismatchError);
}

TEST(Filter, VanishingPredictiveMassIsReported)
{
    const auto model = small_model(8);
    const auto theta = model->parameter(Eigen::Vector2d(0.1, 0.1));
    const VectorMeasure l = embed(GridMeasure::uniform(model->grid()), model->index_set());
    EXPECT_THROW(filter_iterate(*model, theta, {scalar(0.0), scalar(7.0)}, l), NumericalError);
}

TEST(Filter, MassCheckDetectsCorruptedInput)
{
    const auto model = small_model(8);
    const VectorMeasure l = embed(GridMeasure::uniform(model->grid()), model->index_set());
    EXPECT_NO_THROW(check_mass_invariants(l, 1e-10, 0));
    VectorMeasure bad = l;
    bad.density(1).array() += 1.0;
    EXPECT_THROW(check_mass_invariants(bad, 1e-10, 0), NumericalError);
}

TEST(Filter, PlainFiniteDifferenceErrorIsSecondOrder)
{
    const auto model = small_model(16);
    const auto theta = model->parameter(Eigen::Vector2d(0.6, 0.7));
    const auto ys = observations(*model, theta, 4, 21);
    const GridMeasure l = GridMeasure::uniform(model->grid());
    const FilterState s = filter_iterate(*model, theta, ys, embed(l, model->index_set(1)));
    const Eigen::VectorXd exact = s.lambda.density(1).cwiseProduct(model->grid()->weights());
    const auto f = filter_masses_fn(*model, ys, l);
    std::vector<double> logh, loge;
    for (double h : {0.02, 0.04, 0.08}) {
        const Eigen::VectorXd fd = fd_derivative<Eigen::VectorXd>(f, {1, 0}, theta.theta(), FDScheme{h, 1});
        logh.push_back(std::log(h));
        loge.push_back(std::log((fd - exact).cwiseAbs().maxCoeff()));
    }
    EXPECT_NEAR(fit_line(logh, loge).slope, 2.0, 0.3);
}

TEST(Filter, ZeroIndexRowOfSweepIsExactlyZero)
{
    const auto model = small_model(8);
    const auto theta = model->parameter(Eigen::Vector2d(0.2, 0.2));
    const auto ys = observations(*model, theta, 3, 1);
    const ExperimentReport rep =
        derivative_identity_sweep(*model, {theta}, ys, GridMeasure::uniform(model->grid()), SweepOptions{});
    ASSERT_FALSE(rep.rows.empty());
    EXPECT_EQ(std::get<std::string>(rep.rows[0][2]), multiindex_label(MultiIndex::zero(2)));
    EXPECT_EQ(std::get<double>(rep.rows[0][3]), 0.0);
}
