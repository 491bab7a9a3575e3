#include <random>

#include <gtest/gtest.h>

#include "ofjet/grid.hpp"

using namespace ofjet;

namespace {

GridPtr two_cells() { return StateGrid::line(0.0, 1.0, 2); }

}  // namespace

TEST(StateGrid, MidpointsAndWeights)
{
    const auto g = StateGrid::line(-3.0, 3.0, 6);
    EXPECT_EQ(g->size(), 6);
    EXPECT_DOUBLE_EQ(g->point(0)(0), -2.5);
    EXPECT_DOUBLE_EQ(g->point(5)(0), 2.5);
    EXPECT_NEAR(g->total_measure(), 6.0, 1e-14);
    EXPECT_EQ(g->locate(Point::Constant(1, 0.1)), 3);
    for (int i = 0; i < g->size(); ++i) {
        EXPECT_GT(g->weights()(i), 0.0);
        EXPECT_TRUE(g->bounds().contains(g->point(i)));
    }
}

TEST(StateGrid, TwoDimensionalLayout)
{
    const StateGrid g(Box{{0.0, 0.0}, {2.0, 1.0}}, {4, 2});
    EXPECT_EQ(g.size(), 8);
    EXPECT_NEAR(g.total_measure(), 2.0, 1e-14);
    EXPECT_DOUBLE_EQ(g.point(5)(0), 0.75);
    EXPECT_DOUBLE_EQ(g.point(5)(1), 0.75);
    EXPECT_EQ(g.locate(g.point(5)), 5);
}

TEST(StateGrid, RejectsBadBoxes)
{
    EXPECT_THROW(StateGrid(Box{{1.0}, {0.0}}, {4}), std::invalid_argument);
    EXPECT_THROW(StateGrid(Box{{0.0}, {1.0}}, {0}), std::invalid_argument);
    EXPECT_THROW(StateGrid(Box{{0, 0, 0}, {1, 1, 1}}, {2, 2, 2}), std::invalid_argument);
}

TEST(GridMeasure, TvNorm)
{
    const auto g = StateGrid::line(-1.0, 1.0, 8);
    EXPECT_NEAR(tv_norm(GridMeasure::uniform(g)), 1.0, 1e-15);
    EXPECT_EQ(tv_norm(GridMeasure::zero(g)), 0.0);
    GridMeasure m(two_cells(), Eigen::Vector2d(1.0, -1.0));
    EXPECT_DOUBLE_EQ(tv_norm(m), 1.0);
    EXPECT_DOUBLE_EQ(total_mass(m), 0.0);
}

TEST(GridMeasure, TvHomogeneityAndTriangle)
{
    const auto g = StateGrid::line(0.0, 2.0, 16);
    std::mt19937 gen(3);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd a(16), b(16);
        for (int i = 0; i < 16; ++i) {
            a(i) = nd(gen);
            b(i) = nd(gen);
        }
        const GridMeasure m1(g, a), m2(g, b);
        const double s = nd(gen);
        EXPECT_NEAR(tv_norm(s * m1), std::abs(s) * tv_norm(m1), 1e-12);
        EXPECT_LE(tv_norm(m1 + m2), tv_norm(m1) + tv_norm(m2) + 1e-12);
    }
}

TEST(GridMeasure, ProbabilityChecks)
{
    const auto g = StateGrid::line(0.0, 1.0, 10);
    EXPECT_TRUE(GridMeasure::uniform(g).is_probability());
    EXPECT_TRUE(GridMeasure::point_mass(g, 3).is_probability());
    EXPECT_FALSE((-1.0 * GridMeasure::uniform(g)).is_probability());
    EXPECT_NEAR(total_mass(-1.0 * GridMeasure::uniform(g)), -1.0, 1e-14);
}

TEST(GridMeasure, ArithmeticRequiresSameGrid)
{
    GridMeasure a = GridMeasure::uniform(StateGrid::line(0.0, 1.0, 4));
    GridMeasure b = GridMeasure::uniform(StateGrid::line(0.0, 2.0, 4));
    EXPECT_THROW(a += b, MismatchError);
    GridMeasure c = GridMeasure::uniform(StateGrid::line(0.0, 1.0, 4));
    EXPECT_NO_THROW(a += c);
}

TEST(VectorMeasure, EmbedAndNorm)
{
    const auto g = StateGrid::line(-3.0, 3.0, 32);
    const auto idx = enumerate(2, 2);
    const VectorMeasure u = embed(GridMeasure::uniform(g), idx);
    EXPECT_NEAR(vector_norm(u), 1.0, 1e-12);
    EXPECT_TRUE(u.in_l0());
    for (int s = 1; s < idx->size(); ++s) {
        EXPECT_EQ(tv_norm(u.component(s)), 0.0);
    }
    const VectorMeasure p = embed(GridMeasure::point_mass(g, 5), idx);
    EXPECT_NEAR(p.density(0)(5) * g->weights()(5), 1.0, 1e-15);
    EXPECT_NEAR(vector_norm(p), 1.0, 1e-12);
    EXPECT_THROW(embed(GridMeasure::zero(g), idx), std::invalid_argument);
}

TEST(VectorMeasure, NormIsMaxOverComponents)
{
    const auto g = two_cells();
    const auto idx = enumerate(1, 2);
    VectorMeasure v = embed(GridMeasure::uniform(g), idx);
    v.density(1) = Eigen::Vector2d(3.5, -3.5);
    v.density(2) = Eigen::Vector2d(0.5, 0.2);
    EXPECT_DOUBLE_EQ(vector_norm(v), 3.5);
}

TEST(VectorMeasure, Distance)
{
    const auto g = StateGrid::line(0.0, 1.0, 8);
    const auto idx = enumerate(2, 1);
    const GridMeasure a = GridMeasure::uniform(g);
    const GridMeasure b = GridMeasure::point_mass(g, 2);
    EXPECT_EQ(measure_distance(embed(a, idx), embed(a, idx)), 0.0);
    EXPECT_NEAR(measure_distance(embed(a, idx), embed(b, idx)), tv_norm(a - b), 1e-14);
    EXPECT_THROW(measure_distance(embed(a, idx), embed(GridMeasure::uniform(StateGrid::line(0.0, 2.0, 8)), idx)),
                 MismatchError);
    EXPECT_THROW(measure_distance(embed(a, idx), embed(a, enumerate(2, 2))), MismatchError);
}

TEST(VectorMeasure, DistanceTriangleInequality)
{
    const auto g = StateGrid::line(0.0, 1.0, 12);
    const auto idx = enumerate(2, 2);
    std::mt19937 gen(5);
    std::normal_distribution<double> nd;
    auto draw = [&] {
        Eigen::MatrixXd d(12, idx->size());
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            d.data()[i] = nd(gen);
        }
        return VectorMeasure(g, idx, d);
    };
    for (int k = 0; k < 50; ++k) {
        const auto a = draw(), b = draw(), c = draw();
        EXPECT_LE(measure_distance(a, c), measure_distance(a, b) + measure_distance(b, c) + 1e-12);
    }
}
