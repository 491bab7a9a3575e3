#include <cmath>

#include <gtest/gtest.h>

#include "ofjet/random.hpp"

using namespace ofjet;

TEST(Random, SameSeedSameStream)
{
    Rng a(42), b(42);
    for (int k = 0; k < 100; ++k) {
        EXPECT_EQ(a.uniform(), b.uniform());
    }
}

TEST(Random, DerivedSeedsDependOnLabelAndIndex)
{
    EXPECT_EQ(derive_seed(1, "x", 0), derive_seed(1, "x", 0));
    EXPECT_NE(derive_seed(1, "x", 0), derive_seed(1, "y", 0));
    EXPECT_NE(derive_seed(1, "x", 0), derive_seed(1, "x", 1));
    EXPECT_NE(derive_seed(1, "x", 0), derive_seed(2, "x", 0));
}

TEST(Random, QuantileInvertsCdf)
{
    for (double u : {1e-10, 0.01, 0.3, 0.5, 0.9, 1 - 1e-10}) {
        EXPECT_NEAR(normal_cdf(normal_quantile(u)), u, 1e-12 + 1e-9 * u);
    }
}

TEST(Random, UniformInOpenInterval)
{
    Rng r(1);
    for (int k = 0; k < 10000; ++k) {
        const double u = r.uniform();
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Random, TruncatedNormalStaysInside)
{
    Rng r(2);
    double mean = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double v = r.truncated_normal(0.5, 2.0);
        EXPECT_GE(v, 0.5);
        EXPECT_LE(v, 2.0);
        mean += v / n;
    }
    // E[Z | 0.5 < Z < 2]
    const double pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI); }(0.5) -
                       std::exp(-2.0) / std::sqrt(2 * M_PI);
    const double expected = pdf / (normal_cdf(2.0) - normal_cdf(0.5));
    EXPECT_NEAR(mean, expected, 0.01);
}

TEST(Random, FarTailTruncation)
{
    Rng r(3);
    for (int k = 0; k < 100; ++k) {
        const double v = r.truncated_normal(9.0, 12.0);
        EXPECT_GE(v, 9.0);
        EXPECT_LE(v, 12.0);
    }
}

TEST(Random, Categorical)
{
    Rng r(4);
    Eigen::Vector3d w(0.0, 3.0, 1.0);
    int counts[3] = {0, 0, 0};
    for (int k = 0; k < 8000; ++k) {
        ++counts[r.categorical(w)];
    }
    EXPECT_EQ(counts[0], 0);
    EXPECT_NEAR(counts[1] / 8000.0, 0.75, 0.03);
}
