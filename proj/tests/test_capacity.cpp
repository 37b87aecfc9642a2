#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qshock/observables.hpp"
#include "support/blahut_arimoto.hpp"

using namespace qshock;

namespace {

// Textbook closed form, fine when p and q are well separated.
double textbook(double p, double q) {
    const double hp = binary_entropy(p), hq = binary_entropy(q);
    return (-q * hp + p * hq) / (q - p) + std::log2(1.0 + std::exp2((hp - hq) / (q - p)));
}

} // namespace

TEST(BinaryEntropy, KnownValues) {
    EXPECT_EQ(binary_entropy(0.0), 0.0);
    EXPECT_EQ(binary_entropy(1.0), 0.0);
    EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
    EXPECT_NEAR(binary_entropy(0.11), 0.49991595, 1e-8);
}

TEST(Capacity, BoundaryLimitsAreExact) {
    EXPECT_EQ(channel_capacity({1.0, 0.0}), 1.0);
    EXPECT_EQ(channel_capacity({0.0, 1.0}), 1.0);
    for (double v : {0.0, 1e-9, 0.3, 0.5, 1.0}) EXPECT_EQ(channel_capacity({v, v}), 0.0);
}

TEST(Capacity, SymmetricChannel) {
    EXPECT_NEAR(channel_capacity({0.89, 0.11}), 1.0 - binary_entropy(0.11), 1e-14);
    EXPECT_NEAR(channel_capacity({0.89, 0.11}), 0.5001, 1e-4);
}

TEST(Capacity, MatchesBlahutArimotoOnGrid) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 100; ++j) {
            const double p = i / 99.0, q = j / 99.0;
            const auto bounds = ba::capacity(p, q);
            const double c = channel_capacity({p, q});
            ASSERT_LE(bounds.upper - bounds.lower, 1e-12) << p << " " << q;
            worst = std::max(worst, std::abs(c - 0.5 * (bounds.lower + bounds.upper)));
        }
    }
    EXPECT_LE(worst, 1e-9);
}

TEST(Capacity, RelabelingSymmetries) {
    for (double p : {0.01, 0.2, 0.37, 0.8}) {
        for (double q : {0.0, 0.15, 0.36999, 0.9}) {
            const double c = channel_capacity({p, q});
            EXPECT_NEAR(c, channel_capacity({q, p}), 1e-15);
            EXPECT_NEAR(c, channel_capacity({1 - p, 1 - q}), 1e-14);
        }
    }
}

TEST(Capacity, AgreesWithTextbookFormWhenWellSeparated) {
    for (double p : {0.05, 0.3, 0.7, 0.99}) {
        for (double q : {0.01, 0.4, 0.85}) {
            if (std::abs(p - q) < 0.1) continue;
            EXPECT_NEAR(channel_capacity({p, q}), textbook(p, q), 1e-13);
        }
    }
}

TEST(Capacity, SmallSeparationKeepsRelativeAccuracy) {
    // For |p - q| = d << 1: C = d^2 / (8 ln 2 m (1 - m)) (1 + O(d^2)).
    const double m = 0.19;
    for (double d : {1e-3, 1e-5, 1e-7, 1e-9}) {
        const double c = channel_capacity({m + d / 2, m - d / 2});
        const double lead = d * d / (8.0 * std::log(2.0) * m * (1 - m));
        EXPECT_NEAR(c / lead, 1.0, 1e-5) << "d=" << d;
    }
    // The branch switch must not introduce a visible step.
    const double edge = 0.5 * 0.19;
    const double below = channel_capacity({0.19 + 0.5 * edge * (1 - 1e-12), 0.19 - 0.5 * edge * (1 - 1e-12)});
    const double above = channel_capacity({0.19 + 0.5 * edge * (1 + 1e-12), 0.19 - 0.5 * edge * (1 + 1e-12)});
    EXPECT_NEAR(below, above, 1e-13);
}

TEST(Capacity, NearlyEqualProbabilitiesAgainstBlahutArimoto) {
    for (double q : {0.0431, 0.21, 0.5}) {
        for (double d : {1e-2, 3e-4}) {
            const auto b = ba::capacity(q + d, q, 1e-16);
            EXPECT_NEAR(channel_capacity({q + d, q}), b.lower, 1e-12 + 1e-6 * b.lower);
        }
    }
}

TEST(Capacity, RejectsOutOfRangeProbabilities) {
    EXPECT_THROW(channel_capacity({1.1, 0.2}), NumericalError);
    EXPECT_NO_THROW(channel_capacity({1.0 + 1e-13, 0.2}));
}

TEST(C1Factor, Limits) {
    EXPECT_EQ(c1_factor(0.0, 0.0625), 1.0);
    EXPECT_NEAR(c1_factor(2.0, 0.0625), std::exp(-0.5), 1e-15);
    EXPECT_LT(c1_factor(50.0, 0.0625), 1e-100);
    EXPECT_THROW(c1_factor(-1.0, 0.0625), std::domain_error);
}
