#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qshock/oscillatory.hpp"
#include "qshock/quadrature.hpp"

using namespace qshock;

TEST(Quadrature, PolynomialIsExact) {
    auto r = quad::integrate([](double x) { return 3 * x * x; }, 0.0, 2.0);
    EXPECT_NEAR(r.value, 8.0, 1e-14);
}

TEST(Quadrature, OscillatoryFiniteInterval) {
    quad::AdaptiveOptions opt;
    opt.rel_tol = 1e-12;
    auto r = quad::integrate([](double x) { return std::sin(50 * x) * std::exp(-x); }, 0.0, 10.0, opt);
    // int_0^10 e^{-x} sin(50x) dx = (50 - e^{-10}(sin 500 + 50 cos 500)) / 2501
    const double exact = (50.0 - std::exp(-10.0) * (std::sin(500.0) + 50.0 * std::cos(500.0))) / 2501.0;
    EXPECT_NEAR(r.value, exact, 1e-13);
    EXPECT_LE(std::abs(r.value - exact), r.error);
}

TEST(Quadrature, ThrowsWhenBudgetExhausted) {
    quad::AdaptiveOptions opt;
    opt.rel_tol = 1e-15;
    opt.max_segments = 3;
    EXPECT_THROW(quad::integrate([](double x) { return 1.0 / std::sqrt(x + 1e-14); }, 0.0, 1.0, opt),
                 NumericalError);
}

// Reference values from mpmath.expint(n, z) at 30 digits.
TEST(ExpInt, MatchesReferenceValues) {
    struct Case { int n; double re, im; double er, ei; };
    const std::vector<Case> cases = {
        {1, 0.0, -0.5, 0.17778407880661290134, 1.0776889087518299301},
        {1, 0.0, -3.0, -0.11962978600800032763, -0.27785620120457163717},
        {2, 0.0, -0.3, 0.57364880422924999641, 0.49027208655268809138},
        {4, 0.0, -7.5, -0.079839386417432967685, 0.082670626622771813227},
        {6, 0.0, 1.2, 0.017939958551475450018, -0.18794938652338685265},
        {3, 0.0, -40.0, -0.019725923446093092361, -0.015170604895252458713},
    };
    for (const auto& c : cases) {
        const auto v = quad::expint(c.n, {c.re, c.im});
        EXPECT_NEAR(v.real(), c.er, 1e-13) << "n=" << c.n << " z=" << c.im << "i";
        EXPECT_NEAR(v.imag(), c.ei, 1e-13) << "n=" << c.n << " z=" << c.im << "i";
    }
    EXPECT_DOUBLE_EQ(quad::expint(3, {0.0, 0.0}).real(), 0.5);
    EXPECT_THROW(quad::expint(1, {0.0, 0.0}), std::domain_error);
}

TEST(Extrapolation, RecoversPolynomialLimit) {
    std::vector<double> xs, ys;
    for (int m = 0; m < 5; ++m) {
        const double x = 0.1 / std::pow(2.0, m);
        xs.push_back(x);
        ys.push_back(2.5 - 3.0 * x + 0.7 * x * x * x);
    }
    const auto ex = quad::extrapolate_to_zero(xs, ys);
    EXPECT_NEAR(ex.value, 2.5, 1e-13);
    EXPECT_LT(ex.error, 1e-12);
}

TEST(TrigSeries, PointwiseMatchesProduct) {
    const auto s = TrigSeries::sin(1.3, 2.0, -1) * TrigSeries::cos(0.4, 1.0, -2) + TrigSeries::power(0.5, -3);
    for (double k : {0.7, 2.0, 11.0}) {
        const double direct = 2.0 * std::sin(1.3 * k) / k * std::cos(0.4 * k) / (k * k) + 0.5 / (k * k * k);
        EXPECT_NEAR(s(k), direct, 1e-14);
    }
}

TEST(TrigSeries, TailOfDirichletIntegral) {
    // int_K^inf sin(k)/k dk = pi/2 - Si(K); Si(2) = 1.6054129768026948486
    const auto s = TrigSeries::sin(1.0, 1.0, -1);
    const auto tail = s.tail_integral(2.0);
    EXPECT_NEAR(tail.value, std::numbers::pi / 2 - 1.6054129768026948486, 1e-14);
}

TEST(TrigSeries, CancellingFrequenciesDropOut) {
    // sin(k)cos(k) - sin(2k)/2 == 0
    const auto s = TrigSeries::sin(1.0) * TrigSeries::cos(1.0) + TrigSeries::sin(2.0, -0.5);
    const auto t = (s * TrigSeries::power(1.0, -2)).tail_integral(1.0);
    EXPECT_NEAR(t.value, 0.0, 1e-15);
}
