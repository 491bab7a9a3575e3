#include <random>

#include <gtest/gtest.h>

#include "ofjet/multiindex.hpp"

using namespace ofjet;

TEST(MultiIndex, RejectsNegativeEntries)
{
    EXPECT_THROW(MultiIndex({1, -1}), std::invalid_argument);
}

TEST(MultiIndex, Degree)
{
    EXPECT_EQ(MultiIndex({0, 2, 1}).degree(), 3);
    EXPECT_TRUE(MultiIndex::zero(3).is_zero());
}

TEST(MultiIndex, Leq)
{
    EXPECT_TRUE(leq({1, 0}, {1, 1}));
    EXPECT_FALSE(leq({2, 0}, {1, 1}));
    EXPECT_TRUE(leq(MultiIndex::zero(2), {0, 3}));
    EXPECT_THROW(leq({1}, {1, 0}), std::invalid_argument);
}

TEST(MultiIndex, LeqIsPartialOrder)
{
    std::mt19937 gen(7);
    std::uniform_int_distribution<int> entry(0, 2);
    auto draw = [&] { return MultiIndex({entry(gen), entry(gen), entry(gen)}); };
    for (int k = 0; k < 500; ++k) {
        const MultiIndex a = draw(), b = draw(), c = draw();
        EXPECT_TRUE(leq(a, a));
        if (leq(a, b) && leq(b, a)) {
            EXPECT_EQ(a, b);
        }
        if (leq(a, b) && leq(b, c)) {
            EXPECT_TRUE(leq(a, c));
        }
    }
}

TEST(MultiIndex, Multinomial)
{
    EXPECT_EQ(multinomial({2, 1}, {1, 1}), 2);
    EXPECT_EQ(multinomial({3, 2}, {3, 2}), 1);
    EXPECT_EQ(multinomial({3, 2}, {1, 1}), 6);
    EXPECT_THROW(multinomial({1, 1}, {2, 0}), std::invalid_argument);
}

TEST(MultiIndex, MultinomialsOverLowerSetSumToPowerOfTwo)
{
    for (int d = 1; d <= 4; ++d) {
        const IndexSet set(d, 4);
        for (int s = 0; s < set.size(); ++s) {
            std::int64_t total = 0;
            for (const auto& t : set.lower_set(s)) {
                total += t.weight;
            }
            EXPECT_EQ(total, std::int64_t{1} << set[s].degree()) << set[s];
        }
    }
}

TEST(MultiIndex, Difference)
{
    EXPECT_EQ(MultiIndex({2, 1}) - MultiIndex({1, 1}), MultiIndex({1, 0}));
    EXPECT_THROW(MultiIndex({0, 1}) - MultiIndex({1, 0}), std::invalid_argument);
}

TEST(MultiIndex, ESelector)
{
    EXPECT_EQ(e_selector({0, 2, 1}), MultiIndex({0, 1, 0}));
    EXPECT_EQ(e_selector({1, 0}), MultiIndex({1, 0}));
    EXPECT_EQ(e_selector({0, 0, 3}), MultiIndex({0, 0, 1}));
    EXPECT_THROW(e_selector(MultiIndex::zero(2)), std::invalid_argument);
}

TEST(IndexSet, EnumeratesTwoByTwo)
{
    const auto set = enumerate(2, 2);
    ASSERT_EQ(set->size(), 6);
    const std::vector<MultiIndex> expected = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (int s = 0; s < 6; ++s) {
        EXPECT_EQ((*set)[s], expected[static_cast<std::size_t>(s)]);
        EXPECT_EQ(set->slot(expected[static_cast<std::size_t>(s)]), s);
    }
}

TEST(IndexSet, Counts)
{
    EXPECT_EQ(enumerate(1, 3)->size(), 4);
    EXPECT_EQ(enumerate(3, 2)->size(), 10);
    for (int d = 1; d <= 4; ++d) {
        for (int p = 0; p <= 4; ++p) {
            EXPECT_EQ(enumerate(d, p)->size(), index_count(d, p)) << d << " " << p;
        }
    }
}

TEST(IndexSet, BruteForceThreeByTwo)
{
    const auto set = enumerate(3, 2);
    int found = 0;
    for (int a = 0; a <= 2; ++a) {
        for (int b = 0; b <= 2; ++b) {
            for (int c = 0; c <= 2; ++c) {
                if (a + b + c <= 2) {
                    EXPECT_TRUE(set->contains({a, b, c}));
                    ++found;
                }
            }
        }
    }
    EXPECT_EQ(found, set->size());
}

TEST(IndexSet, GradedOrderWithZeroFirst)
{
    const auto set = enumerate(3, 3);
    EXPECT_TRUE((*set)[0].is_zero());
    for (int s = 1; s < set->size(); ++s) {
        EXPECT_LE((*set)[s - 1].degree(), (*set)[s].degree());
    }
}

TEST(IndexSet, LowerSetTerms)
{
    const auto set = enumerate(2, 2);
    const int s = set->slot({1, 1});
    const auto& terms = set->lower_set(s);
    ASSERT_EQ(terms.size(), 4u);
    for (const auto& t : terms) {
        EXPECT_EQ((*set)[t.beta] + (*set)[t.complement], MultiIndex({1, 1}));
        EXPECT_EQ(t.weight, 1);
    }
}

TEST(IndexSet, RejectsBadArguments)
{
    EXPECT_THROW(enumerate(0, 2), std::invalid_argument);
    EXPECT_THROW(enumerate(2, -1), std::invalid_argument);
    EXPECT_THROW(enumerate(2, 1)->slot({2, 0}), std::out_of_range);
}
