#pragma once

// Finite sums of power-law damped complex exponentials,
//
//     f(k) = Re sum_m c_m k^{p_m} e^{i w_m k},
//
// used to represent the large-momentum behaviour of the radial kernel
// integrands. Products of sin/cos/power factors stay inside this class, and
// the tail int_K^inf f(k) dk has an exact expression in terms of generalized
// exponential integrals.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace qshock {

class TrigSeries {
public:
    struct Term {
        std::complex<double> coef;
        int power;
        double freq;
    };

    TrigSeries() = default;

    static TrigSeries power(double c, int p) { return TrigSeries({{{c, 0.0}, p, 0.0}}); }
    /// c k^p sin(w k)
    static TrigSeries sin(double w, double c = 1.0, int p = 0) {
        const std::complex<double> h{0.0, -0.5 * c};  // 1/(2i)
        return TrigSeries({{h, p, w}, {-h, p, -w}});
    }
    /// c k^p cos(w k)
    static TrigSeries cos(double w, double c = 1.0, int p = 0) {
        return TrigSeries({{{0.5 * c, 0.0}, p, w}, {{0.5 * c, 0.0}, p, -w}});
    }

    TrigSeries operator*(const TrigSeries& o) const {
        std::vector<Term> out;
        out.reserve(terms_.size() * o.terms_.size());
        for (const auto& a : terms_)
            for (const auto& b : o.terms_)
                out.push_back({a.coef * b.coef, a.power + b.power, a.freq + b.freq});
        TrigSeries r(std::move(out));
        r.simplify();
        return r;
    }

    TrigSeries operator+(const TrigSeries& o) const {
        std::vector<Term> out = terms_;
        out.insert(out.end(), o.terms_.begin(), o.terms_.end());
        TrigSeries r(std::move(out));
        r.simplify();
        return r;
    }

    TrigSeries operator*(double s) const {
        TrigSeries r = *this;
        for (auto& t : r.terms_) t.coef *= s;
        return r;
    }

    const std::vector<Term>& terms() const noexcept { return terms_; }

    int max_power() const {
        int p = std::numeric_limits<int>::min();
        for (const auto& t : terms_) p = std::max(p, t.power);
        return p;
    }

    double max_frequency() const {
        double w = 0.0;
        for (const auto& t : terms_) w = std::max(w, std::abs(t.freq));
        return w;
    }

    /// Pointwise value (k > 0). Suffers cancellation for small k; the direct
    /// integrand should be used there.
    double operator()(double k) const {
        std::complex<double> s{0.0, 0.0};
        for (const auto& t : terms_) s += t.coef * std::pow(k, t.power) * std::exp(std::complex<double>{0.0, t.freq * k});
        return s.real();
    }

    struct Tail {
        double value;
        /// Rounding bound from cancellation between terms.
        double error;
    };

    /// int_K^inf f(k) dk for K > 0. Every term must decay (power <= -1); a
    /// non-oscillating k^-1 term must have vanishing real coefficient.
    Tail tail_integral(double K) const {
        if (!(K > 0.0)) throw std::domain_error("TrigSeries::tail_integral: K must be > 0");
        double value = 0.0, magnitude = 0.0;
        for (const auto& t : folded()) {
            if (t.power >= 0 && std::abs(t.coef) > 0.0)
                throw NumericalError("TrigSeries: non-decaying term in tail");
            if (t.power == -1 && t.freq == 0.0) {
                if (std::abs(t.coef.real()) > 1e-12 * (1.0 + std::abs(t.coef)))
                    throw NumericalError("TrigSeries: logarithmically divergent tail");
                continue;
            }
            const int n = -t.power;
            const auto e = quad::expint(n, std::complex<double>{0.0, -t.freq * K});
            const double contrib = (t.coef * std::pow(K, 1 - n) * e).real();
            value += contrib;
            magnitude += std::abs(t.coef) * std::pow(K, 1 - n) * std::abs(e);
        }
        return {value, 8.0 * std::numeric_limits<double>::epsilon() * magnitude};
    }

private:
    explicit TrigSeries(std::vector<Term> t) : terms_(std::move(t)) {}

    static bool same_freq(double a, double b) {
        return std::abs(a - b) <= 1e-13 * (1.0 + std::abs(a) + std::abs(b));
    }

    void simplify() {
        std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
            return a.power != b.power ? a.power < b.power : a.freq < b.freq;
        });
        std::vector<Term> out;
        for (const auto& t : terms_) {
            if (!out.empty() && out.back().power == t.power && same_freq(out.back().freq, t.freq)) {
                out.back().coef += t.coef;
            } else {
                out.push_back(t);
            }
        }
        std::erase_if(out, [](const Term& t) { return t.coef == std::complex<double>{0.0, 0.0}; });
        terms_ = std::move(out);
    }

    /// Only Re f matters, so a term at negative frequency can be replaced by
    /// its conjugate at positive frequency. Frequencies within rounding of
    /// zero are snapped to zero.
    std::vector<Term> folded() const {
        std::vector<Term> f;
        f.reserve(terms_.size());
        for (auto t : terms_) {
            if (std::abs(t.freq) <= 1e-13) t.freq = 0.0;
            if (t.freq < 0.0) {
                t.freq = -t.freq;
                t.coef = std::conj(t.coef);
            }
            f.push_back(t);
        }
        TrigSeries tmp(std::move(f));
        tmp.simplify();
        return tmp.terms_;
    }

    std::vector<Term> terms_;
};

} // namespace qshock
