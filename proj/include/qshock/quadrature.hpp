#pragma once

// One-dimensional quadrature building blocks: adaptive Gauss-Kronrod,
// generalized exponential integrals of complex argument, and polynomial
// extrapolation to zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace qshock::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    /// Integral of |f|; a natural scale for absolute tolerances.
    double abs_value = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452638, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a, b, value, error, abs_value;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = 0.0;
    double resk = fc * kWgk[10];
    double resabs = std::abs(resk);
    std::array<double, 10> f1{}, f2{};
    for (int j = 0; j < 5; ++j) {
        const int jtw = 2 * j + 1;
        const double dx = half * kXgk[jtw];
        const double v1 = f(center - dx), v2 = f(center + dx);
        f1[jtw] = v1;
        f2[jtw] = v2;
        resg += kWg[j] * (v1 + v2);
        resk += kWgk[jtw] * (v1 + v2);
        resabs += kWgk[jtw] * (std::abs(v1) + std::abs(v2));
    }
    for (int j = 0; j < 5; ++j) {
        const int jtwm1 = 2 * j;
        const double dx = half * kXgk[jtwm1];
        const double v1 = f(center - dx), v2 = f(center + dx);
        f1[jtwm1] = v1;
        f2[jtwm1] = v2;
        resk += kWgk[jtwm1] * (v1 + v2);
        resabs += kWgk[jtwm1] * (std::abs(v1) + std::abs(v2));
    }
    const double reskh = resk * 0.5;
    double resasc = kWgk[10] * std::abs(fc - reskh);
    for (int j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));

    const double result = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return {a, b, result, err, resabs};
}

} // namespace detail

struct AdaptiveOptions {
    double abs_tol = 0.0;
    double rel_tol = 1e-10;
    /// Relative tolerance applied to the integral of |f|; lets integrals that
    /// cancel to (near) zero terminate.
    double abs_rel_tol = 0.0;
    std::size_t initial_panels = 1;
    std::size_t max_segments = 20000;
};

/// Globally adaptive Gauss-Kronrod (21 point) on [a, b]. Throws
/// NumericalError when the segment budget is exhausted.
template <class F>
Result integrate(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
    std::priority_queue<detail::Segment> heap;
    const std::size_t panels = std::max<std::size_t>(1, opt.initial_panels);
    double total = 0.0, total_err = 0.0, total_abs = 0.0;
    std::size_t evals = 0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double lo = a + (b - a) * static_cast<double>(i) / static_cast<double>(panels);
        const double hi = a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(panels);
        auto seg = detail::gk21(f, lo, hi);
        evals += 21;
        total += seg.value;
        total_err += seg.error;
        total_abs += seg.abs_value;
        heap.push(seg);
    }
    auto tolerance = [&] {
        return std::max({opt.abs_tol, opt.rel_tol * std::abs(total), opt.abs_rel_tol * total_abs});
    };
    while (total_err > tolerance()) {
        if (heap.size() >= opt.max_segments)
            throw NumericalError("adaptive quadrature did not converge", total_err);
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
            throw NumericalError("adaptive quadrature: interval underflow", total_err);
        auto left = detail::gk21(f, worst.a, mid);
        auto right = detail::gk21(f, mid, worst.b);
        evals += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_abs += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    double value = 0.0, err = 0.0, absv = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        absv += heap.top().abs_value;
        heap.pop();
    }
    return {value, err, absv, evals};
}

/// Generalized exponential integral E_n(z) = int_1^inf e^{-z t} t^{-n} dt for
/// n >= 1 and Re z >= 0 (z != 0 when n == 1).
inline std::complex<double> expint(int n, std::complex<double> z) {
    using C = std::complex<double>;
    constexpr double euler = 0.577215664901532860606512090082402;
    constexpr double eps = 4e-16;
    constexpr int max_iter = 100000;
    if (n < 1) throw std::domain_error("expint: n must be >= 1");
    if (z == C{0.0, 0.0}) {
        if (n == 1) throw std::domain_error("expint: E_1(0) diverges");
        return C{1.0 / (n - 1), 0.0};
    }
    const int nm1 = n - 1;
    if (std::abs(z) > 1.0) {
        // Modified Lentz evaluation of the continued fraction.
        const double tiny = 1e-300;
        C b = z + static_cast<double>(n);
        C c = 1.0 / tiny;
        C d = 1.0 / b;
        C h = d;
        for (int i = 1; i <= max_iter; ++i) {
            const double an = -static_cast<double>(i) * (nm1 + i);
            b += 2.0;
            d = 1.0 / (an * d + b);
            if (std::abs(d) == 0.0) d = tiny;
            c = b + an / c;
            if (std::abs(c) == 0.0) c = tiny;
            const C del = c * d;
            h *= del;
            if (std::abs(del - 1.0) < eps) return h * std::exp(-z);
        }
        throw NumericalError("expint: continued fraction did not converge");
    }
    C ans = nm1 != 0 ? C{1.0 / nm1, 0.0} : -std::log(z) - euler;
    C fact{1.0, 0.0};
    for (int i = 1; i <= max_iter; ++i) {
        fact *= -z / static_cast<double>(i);
        C del;
        if (i != nm1) {
            del = -fact / static_cast<double>(i - nm1);
        } else {
            double psi = -euler;
            for (int ii = 1; ii <= nm1; ++ii) psi += 1.0 / ii;
            del = fact * (-std::log(z) + psi);
        }
        ans += del;
        if (std::abs(del) < std::abs(ans) * eps) return ans;
    }
    throw NumericalError("expint: series did not converge");
}

struct Extrapolation {
    double value;
    double error;
};

/// Neville extrapolation of samples y(x_i) to x = 0. The error estimate is
/// the larger of the changes from dropping either the first or the last sample.
inline Extrapolation extrapolate_to_zero(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n == 0 || ys.size() != n) throw std::domain_error("extrapolate_to_zero: bad sample set");
    if (n == 1) return {ys[0], std::abs(ys[0])};
    // After pass m, p[i] is the interpolant through samples i-m..i evaluated at 0.
    std::vector<double> p(ys.begin(), ys.end());
    double without_last = 0.0, without_first = 0.0;
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = n - 1; i >= m; --i) {
            p[i] = (xs[i] * p[i - 1] - xs[i - m] * p[i]) / (xs[i] - xs[i - m]);
            if (i == m) break;
        }
        if (m == n - 2) {
            without_last = p[n - 2];
            without_first = p[n - 1];
        }
    }
    if (n == 2) {
        without_last = ys[0];
        without_first = ys[1];
    }
    const double value = p[n - 1];
    return {value, std::max(std::abs(value - without_last), std::abs(value - without_first))};
}

} // namespace qshock::quad
