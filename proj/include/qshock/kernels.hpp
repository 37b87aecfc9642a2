#pragma once

// Radial momentum integrals for a uniform ball smearing of radius R.
//
// All field-theoretic integrals reduce (see docs/derivations.md) to
//
//   vacuum variance   nu        = 1/(4 pi^2)  int k S(k)^2 dk
//   commutator        Delta     = -1/(2 pi^2) int k S_a S_b sinc(k d) sin(k dt) dk
//   radiation, time   Im A_0    = 1/(4 pi^2)  int k^2 S sinc(k r) cos(k dt) dk
//   radiation, radial Im A_r    = 1/(4 pi^2)  int k S [k sinc'(k r)] sin(k dt) dk
//
// over k in [0, inf), with S(k) = 4 pi (sin kR - kR cos kR) / k^3.
//
// Default strategy ("split tail"): adaptive Gauss-Kronrod on [0, K0] applied
// to the directly evaluated integrand, plus the exact tail over [K0, inf) of
// the integrand's trigonometric expansion. The independent "regulator"
// strategy integrates f(k) exp(-(eps k)^8) for a ladder of eps and
// extrapolates to eps = 0.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "oscillatory.hpp"
#include "quadrature.hpp"

namespace qshock {

inline constexpr double kPi = std::numbers::pi;

/// Fourier transform of the indicator of a ball of radius R, |k| = k.
inline double sphere_form_factor(double k, double R) {
    const double u = k * R;
    const double r3 = 4.0 * kPi * R * R * R;
    if (std::abs(u) < 0.05) {
        const double u2 = u * u;
        return r3 * (1.0 / 3.0 - u2 / 30.0 + u2 * u2 / 840.0 - u2 * u2 * u2 / 45360.0);
    }
    return r3 * (std::sin(u) - u * std::cos(u)) / (u * u * u);
}

namespace detail {

inline double sinc(double u) {
    if (std::abs(u) < 1e-4) return 1.0 - u * u / 6.0;
    return std::sin(u) / u;
}

/// d/du sinc(u)
inline double sinc_prime(double u) {
    if (std::abs(u) < 0.05) {
        const double u2 = u * u;
        return -u * (1.0 / 3.0 - u2 / 30.0 + u2 * u2 / 840.0 - u2 * u2 * u2 / 45360.0);
    }
    return (u * std::cos(u) - std::sin(u)) / (u * u);
}

inline TrigSeries form_factor_series(double R) {
    return TrigSeries::sin(R, 4.0 * kPi, -3) + TrigSeries::cos(R, -4.0 * kPi * R, -2);
}

inline TrigSeries sinc_series(double r) { return TrigSeries::sin(r, 1.0 / r, -1); }

/// k sinc'(k r) = cos(k r)/r - sin(k r)/(k r^2)
inline TrigSeries radial_sinc_series(double r) {
    return TrigSeries::cos(r, 1.0 / r, 0) + TrigSeries::sin(r, -1.0 / (r * r), -1);
}

} // namespace detail

enum class KernelKind : int { vacuum_variance = 0, commutator = 1, radiation_time = 2, radiation_radial = 3 };

inline const char* to_string(KernelKind k) {
    switch (k) {
    case KernelKind::vacuum_variance: return "nu";
    case KernelKind::commutator: return "commutator";
    case KernelKind::radiation_time: return "radiation-time";
    case KernelKind::radiation_radial: return "radiation-radial";
    }
    return "?";
}

enum class QuadratureStrategy { split_tail, regulator };

struct KernelSettings {
    double rel_tol = 1e-8;
    QuadratureStrategy strategy = QuadratureStrategy::split_tail;
    bool use_cache = true;
    /// Regulator ladder: eps_m = regulator_eps0 / 2^m, m < regulator_levels.
    double regulator_eps0 = 0.05;
    int regulator_levels = 6;

    /// Defaults, with QSHOCK_KERNEL_TOL overriding rel_tol when set.
    static KernelSettings from_environment() {
        KernelSettings s;
        if (const char* env = std::getenv("QSHOCK_KERNEL_TOL")) {
            char* end = nullptr;
            const double v = std::strtod(env, &end);
            if (end != env && v > 0.0 && std::isfinite(v)) s.rel_tol = v;
        }
        return s;
    }
};

struct KernelValue {
    double value = 0.0;
    double error = 0.0;
};

/// Separations below this are treated as coincident (removable singularity).
inline constexpr double kCoincidentSeparation = 1e-6;

/// Evaluates and memoizes kernel integrals. Thread safe; values depend only
/// on the arguments and the settings, never on evaluation order.
class KernelSet {
public:
    explicit KernelSet(KernelSettings settings = {}) : settings_(settings) {}

    KernelSet(const KernelSet& o) : settings_(o.settings_) {}

    const KernelSettings& settings() const noexcept { return settings_; }

    KernelValue vacuum_variance(double R) const {
        require_radius(R);
        return cached({KernelKind::vacuum_variance, 0, 0, R, R});
    }

    /// Delta(d, dt) with int d^3k (alpha_a alpha_b^* - c.c.) = i Delta, where
    /// dt = t_b - t_a and d = |x_a - x_b|.
    KernelValue commutator(double d, double dt, double Ra, double Rb) const {
        require_radius(Ra);
        require_radius(Rb);
        if (!(d >= 0.0)) throw std::domain_error("commutator: distance must be >= 0");
        if (dt == 0.0) return {0.0, 0.0};
        // Symmetric in the two radii; order them so cache keys coincide.
        if (Rb < Ra) std::swap(Ra, Rb);
        return cached({KernelKind::commutator, d, dt, Ra, Rb});
    }

    KernelValue radiation(double r, double dt, double R, KernelKind component) const {
        require_radius(R);
        if (component != KernelKind::radiation_time && component != KernelKind::radiation_radial)
            throw std::domain_error("radiation: component must be radiation_time or radiation_radial");
        if (!(r >= 0.0)) throw std::domain_error("radiation: distance must be >= 0");
        if (r < kCoincidentSeparation) {
            if (component == KernelKind::radiation_radial) return {0.0, 0.0};
            r = kCoincidentSeparation;
        }
        return cached({component, r, dt, R, R});
    }

    std::size_t cache_size() const {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }

    /// Direct integrand, exposed for diagnostics and tests.
    static double integrand(KernelKind kind, double k, double r, double dt, double Ra, double Rb) {
        constexpr double inv4pi2 = 1.0 / (4.0 * kPi * kPi);
        switch (kind) {
        case KernelKind::vacuum_variance: {
            const double s = sphere_form_factor(k, Ra);
            return inv4pi2 * k * s * s;
        }
        case KernelKind::commutator: {
            const double sinc = r < kCoincidentSeparation ? 1.0 : detail::sinc(k * r);
            return -2.0 * inv4pi2 * k * sphere_form_factor(k, Ra) * sphere_form_factor(k, Rb) * sinc *
                   std::sin(k * dt);
        }
        case KernelKind::radiation_time: {
            const double sinc = r < kCoincidentSeparation ? 1.0 : detail::sinc(k * r);
            return inv4pi2 * k * k * sphere_form_factor(k, Ra) * sinc * std::cos(k * dt);
        }
        case KernelKind::radiation_radial:
            return inv4pi2 * k * sphere_form_factor(k, Ra) * k * detail::sinc_prime(k * r) * std::sin(k * dt);
        }
        return 0.0;
    }

    /// Trigonometric expansion of the integrand, valid for k > 0.
    static TrigSeries tail_series(KernelKind kind, double r, double dt, double Ra, double Rb) {
        constexpr double inv4pi2 = 1.0 / (4.0 * kPi * kPi);
        const TrigSeries k1 = TrigSeries::power(1.0, 1);
        switch (kind) {
        case KernelKind::vacuum_variance:
            return k1 * detail::form_factor_series(Ra) * detail::form_factor_series(Ra) * inv4pi2;
        case KernelKind::commutator: {
            TrigSeries s = k1 * detail::form_factor_series(Ra) * detail::form_factor_series(Rb) *
                           TrigSeries::sin(dt);
            if (r >= kCoincidentSeparation) s = s * detail::sinc_series(r);
            return s * (-2.0 * inv4pi2);
        }
        case KernelKind::radiation_time: {
            TrigSeries s = TrigSeries::power(1.0, 2) * detail::form_factor_series(Ra) * TrigSeries::cos(dt);
            if (r >= kCoincidentSeparation) s = s * detail::sinc_series(r);
            return s * inv4pi2;
        }
        case KernelKind::radiation_radial:
            return k1 * detail::form_factor_series(Ra) * detail::radial_sinc_series(r) * TrigSeries::sin(dt) *
                   inv4pi2;
        }
        return {};
    }

    /// Uncached evaluation with an explicit strategy.
    KernelValue compute(KernelKind kind, double r, double dt, double Ra, double Rb,
                        QuadratureStrategy strategy) const {
        return strategy == QuadratureStrategy::split_tail ? split_tail(kind, r, dt, Ra, Rb)
                                                          : regulated(kind, r, dt, Ra, Rb);
    }

private:
    // Keys compare bit patterns, so a cached value is always the value at
    // exactly the requested arguments.
    struct Key {
        KernelKind kind;
        double r, dt, Ra, Rb;
        bool operator==(const Key& o) const noexcept {
            return kind == o.kind && bits(r) == bits(o.r) && bits(dt) == bits(o.dt) && bits(Ra) == bits(o.Ra) &&
                   bits(Rb) == bits(o.Rb);
        }
    };
    static std::uint64_t bits(double v) noexcept { return std::bit_cast<std::uint64_t>(v + 0.0); }
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::size_t h = std::hash<int>{}(static_cast<int>(k.kind));
            auto mix = [&h](std::uint64_t v) { h ^= std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
            mix(bits(k.r));
            mix(bits(k.dt));
            mix(bits(k.Ra));
            mix(bits(k.Rb));
            return h;
        }
    };

    static void require_radius(double R) {
        if (!(R > 0.0) || !std::isfinite(R)) throw std::domain_error("kernel: radius must be > 0");
    }

    KernelValue cached(const Key& key) const {
        if (settings_.use_cache) {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        const KernelValue v = compute(key.kind, key.r, key.dt, key.Ra, key.Rb, settings_.strategy);
        if (settings_.use_cache) {
            std::unique_lock lock(mutex_);
            cache_.emplace(key, v);
        }
        return v;
    }

    static double length_scale(KernelKind kind, double r, double Ra, double Rb) {
        double l = std::min(Ra, Rb);
        if (kind != KernelKind::vacuum_variance && r >= kCoincidentSeparation) l = std::min(l, r);
        return l;
    }

    static double bandwidth(double r, double dt, double Ra, double Rb) {
        return Ra + Rb + r + std::abs(dt);
    }

    KernelValue split_tail(KernelKind kind, double r, double dt, double Ra, double Rb) const {
        const double tol = settings_.rel_tol;
        const TrigSeries series = tail_series(kind, r, dt, Ra, Rb);
        const double width = bandwidth(r, dt, Ra, Rb);
        double K0 = std::clamp(5.0 / length_scale(kind, r, Ra, Rb), 10.0, 1e4);
        auto f = [&](double k) { return integrand(kind, k, r, dt, Ra, Rb); };
        for (;;) {
            quad::AdaptiveOptions opt;
            opt.rel_tol = tol;
            opt.abs_rel_tol = tol;
            opt.initial_panels = static_cast<std::size_t>(std::ceil(K0 * width / (2.0 * kPi))) + 1;
            opt.max_segments = 200000;
            const auto low = quad::integrate(f, 0.0, K0, opt);
            const auto tail = series.tail_integral(K0);
            const double value = low.value + tail.value;
            const double error = low.error + tail.error;
            const double target = std::max(tol * std::abs(value), tol * low.abs_value);
            if (tail.error <= 0.5 * target || K0 >= 1e4) return {value, error};
            K0 *= 4.0;
        }
    }

    /// The cutoff exp(-(eps k)^8) is flat near k = 0, so for the power-law
    /// tails here the regulated value is a series in eps^2 (logarithms enter
    /// only at eps^8); extrapolation runs in eps^2.
    KernelValue regulated(KernelKind kind, double r, double dt, double Ra, double Rb) const {
        const double width = bandwidth(r, dt, Ra, Rb);
        const int levels = std::max(2, settings_.regulator_levels);
        std::vector<double> eps2(levels), vals(levels);
        double err_max = 0.0;
        for (int m = 0; m < levels; ++m) {
            const double e = settings_.regulator_eps0 / std::pow(2.0, m);
            eps2[m] = e * e;
            const double kmax = 2.2 / e;
            auto f = [&](double k) {
                const double x = e * k;
                const double x2 = x * x, x4 = x2 * x2;
                return integrand(kind, k, r, dt, Ra, Rb) * std::exp(-x4 * x4);
            };
            quad::AdaptiveOptions opt;
            opt.rel_tol = 0.1 * settings_.rel_tol;
            opt.abs_rel_tol = 0.1 * settings_.rel_tol;
            opt.initial_panels = static_cast<std::size_t>(std::ceil(kmax * width / (2.0 * kPi))) + 1;
            opt.max_segments = 2000000;
            const auto res = quad::integrate(f, 0.0, kmax, opt);
            vals[m] = res.value;
            err_max = std::max(err_max, res.error);
        }
        const auto ex = quad::extrapolate_to_zero(eps2, vals);
        return {ex.value, ex.error + err_max};
    }

    KernelSettings settings_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<Key, KernelValue, KeyHash> cache_;
};

inline const KernelSet& default_kernels() {
    static const KernelSet set(KernelSettings::from_environment());
    return set;
}

inline double vacuum_variance(double R) { return default_kernels().vacuum_variance(R).value; }

inline double commutator_kernel(double d, double dt, double R) {
    return default_kernels().commutator(d, dt, R, R).value;
}

/// j = 0 gives Im A_0; j = 1, 2, 3 give the radial scalar that the caller
/// projects onto (x_j - x_source,j) / r.
inline double radiation_kernel(double r, double dt, double R, int j) {
    if (j < 0 || j > 3) throw std::domain_error("radiation_kernel: j must be in 0..3");
    return default_kernels()
        .radiation(r, dt, R, j == 0 ? KernelKind::radiation_time : KernelKind::radiation_radial)
        .value;
}

} // namespace qshock
