#pragma once

// Physical outputs: normal-ordered energy density, receiver excitation
// probability and the binary channel capacity built from it.

#include <array>
#include <cmath>
#include <concepts>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "emitters.hpp"
#include "kernels.hpp"
#include "scenario.hpp"

namespace qshock {

/// Probabilities that the receiver ends up excited when the emitters couple
/// (p, logical 1) and when they stay silent (q, logical 0).
struct ChannelPoint {
    double p = 0.0;
    double q = 0.0;
};

/// Probabilities may leave [0, 1] by at most this much before it is an error.
inline constexpr double kProbabilityTolerance = 1e-12;

inline double clamp_probability(double v, const char* what) {
    if (!(v >= -kProbabilityTolerance && v <= 1.0 + kProbabilityTolerance))
        throw NumericalError(std::string(what) + " outside [0, 1]: " + std::to_string(v),
                             std::max(-v, v - 1.0));
    return std::clamp(v, 0.0, 1.0);
}

/// h(x) in bits.
inline double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -(x * std::log2(x) + (1.0 - x) * std::log2(1.0 - x));
}

namespace detail {

/// (1 + u) log(1 + u) - u for u >= -1.
inline double psi(double u) {
    if (u <= -1.0) return 1.0;
    if (std::abs(u) < 1e-3) {
        // sum_{k>=2} (-1)^k u^k / (k (k - 1))
        double term = u * u, s = 0.0;
        for (int k = 2; k < 9; ++k) {
            s += ((k % 2 == 0) ? 1.0 : -1.0) * term / (k * (k - 1));
            term *= u;
        }
        return s;
    }
    return (1.0 + u) * std::log1p(u) - u;
}

/// 1 / (1 + 2^x)
inline double logistic2(double x) { return 1.0 / (1.0 + std::exp2(x)); }

inline constexpr std::array<double, 10> kGl20x = {
    0.0765265211334973337546404, 0.2277858511416450780804962, 0.3737060887154195606725482,
    0.5108670019508270980043641, 0.6360536807265150254528367, 0.7463319064601507926143051,
    0.8391169718222188233945291, 0.9122344282513259058677524, 0.9639719272779137912676661,
    0.9931285991850949247861224};
inline constexpr std::array<double, 10> kGl20w = {
    0.1527533871307258506980843, 0.1491729864726037467878287, 0.1420961093183820513292983,
    0.1316886384491766268984945, 0.1181945319615184173123774, 0.1019301198172404350367501,
    0.0832767415767047487247581, 0.0626720483341090635695065, 0.0406014298003869413310400,
    0.0176140071391521183118620};

} // namespace detail

/// Capacity in bits of the binary channel with P(1|1) = p, P(1|0) = q.
///
/// At the optimum the output distribution r satisfies
/// log2((1 - r) / r) = (h(p) - h(q)) / (p - q), and the capacity equals the
/// relative entropy D(p || r). Both steps are arranged to keep full relative
/// accuracy when p and q are close.
inline double channel_capacity(ChannelPoint pt) {
    const double p = clamp_probability(pt.p, "p");
    const double q = clamp_probability(pt.q, "q");
    if (p == q) return 0.0;
    if ((p == 0.0 && q == 1.0) || (p == 1.0 && q == 0.0)) return 1.0;

    const double m = 0.5 * (p + q);
    const double delta = p - q;
    double p_minus_r;  // p - r
    double r;
    if (std::abs(delta) <= 0.5 * std::min(m, 1.0 - m)) {
        // Mean of h'(x) - h'(m) over [q, p], written in t = x - m so that
        // nothing cancels.
        double excess = 0.0;  // (h(p) - h(q)) / (p - q) - h'(m)
        for (std::size_t k = 0; k < detail::kGl20x.size(); ++k) {
            for (double sgn : {-1.0, 1.0}) {
                const double t = sgn * detail::kGl20x[k] * 0.5 * delta;
                excess += detail::kGl20w[k] * (std::log1p(-t / (1.0 - m)) - std::log1p(t / m));
            }
        }
        excess *= 0.5 / std::numbers::ln2;
        // r = 1 / (1 + 2^(h'(m) + excess)) and 1 / (1 + 2^h'(m)) = m.
        const double a = std::log2((1.0 - m) / m);
        const double shift = std::exp2(a) * -std::expm1(excess * std::numbers::ln2) /
                             ((1.0 + std::exp2(a + excess)) * (1.0 + std::exp2(a)));
        p_minus_r = 0.5 * delta - shift;
        r = m + shift;
    } else {
        const double slope = (binary_entropy(p) - binary_entropy(q)) / delta;
        r = detail::logistic2(slope);
        p_minus_r = p - r;
    }
    const double u = p_minus_r / r;
    const double v = -p_minus_r / (1.0 - r);
    const double c = (r * detail::psi(u) + (1.0 - r) * detail::psi(v)) / std::numbers::ln2;
    return std::clamp(c, 0.0, 1.0);
}

/// Vacuum expectation of the receiver's displacement, exp(-2 lambda^2 nu).
inline double c1_factor(double lambda_b, double nu) {
    if (!(lambda_b >= 0.0)) throw std::domain_error("c1_factor: lambda_B must be >= 0");
    return std::exp(-2.0 * lambda_b * lambda_b * nu);
}

/// Supplies the field integrals between detectors and field points.
///   vacuum_variance(d)    nu for detector d
///   commutator(a, b)      Delta with dt = t_b - t_a, d = |x_a - x_b|
///   radiation(a, x, t)    Im A_{(a), j}(x, t) for j = 0..3, zero for t <= t_a
template <class K>
concept KernelProvider = requires(const K& k, const Detector& a, const Detector& b, const Vec3& x, double t) {
    { k.vacuum_variance(a) } -> std::convertible_to<double>;
    { k.commutator(a, b) } -> std::convertible_to<double>;
    { k.radiation(a, x, t) } -> std::convertible_to<std::array<double, 4>>;
};

/// Continuum-field kernels backed by a KernelSet.
class ContinuumKernels {
public:
    ContinuumKernels() : set_(&default_kernels()) {}
    explicit ContinuumKernels(const KernelSet& set) : set_(&set) {}

    const KernelSet& set() const noexcept { return *set_; }

    double vacuum_variance(const Detector& d) const { return set_->vacuum_variance(d.smearing_radius).value; }

    double commutator(const Detector& a, const Detector& b) const {
        const double d = (a.position - b.position).norm();
        return set_->commutator(d, b.coupling_time - a.coupling_time, a.smearing_radius, b.smearing_radius).value;
    }

    std::array<double, 4> radiation(const Detector& a, const Vec3& x, double t) const {
        const double tau = t - a.coupling_time;
        if (!(tau > 0.0)) return {0.0, 0.0, 0.0, 0.0};
        const Vec3 sep = x - a.position;
        const double r = sep.norm();
        const double a0 = set_->radiation(r, tau, a.smearing_radius, KernelKind::radiation_time).value;
        if (r < kCoincidentSeparation) return {a0, 0.0, 0.0, 0.0};
        const double ar = set_->radiation(r, tau, a.smearing_radius, KernelKind::radiation_radial).value;
        return {a0, ar * sep.x / r, ar * sep.y / r, ar * sep.z / r};
    }

private:
    const KernelSet* set_;
};

static_assert(KernelProvider<ContinuumKernels>);

/// True when the receiver has not yet coupled at the evaluation time, so its
/// excitation probability is identically zero.
inline bool receiver_gated(const Scenario& s) {
    return !(s.evaluation_time > s.require_receiver().coupling_time);
}

/// Receiver-side quantities that do not depend on the receiver position:
/// monopole phases of the emitters and the receiver's vacuum factor.
template <KernelProvider K>
class ReceiverModel {
public:
    ReceiverModel(const Scenario& s, const K& kernels)
        : scenario_(&s), kernels_(&kernels), phases_(MonopolePhase::of(s.emitters)) {
        validate(s);
        const auto& bob = s.require_receiver();
        c1_ = c1_factor(bob.coupling_strength, kernels.vacuum_variance(bob));
    }

    double c1() const noexcept { return c1_; }

    /// g_i = 2 lambda_B lambda_i Theta(t_B - t_i) Delta_i for a receiver.
    std::vector<double> angles(const Detector& bob) const {
        const auto& em = scenario_->emitters;
        std::vector<double> g(em.size(), 0.0);
        for (std::size_t i = 0; i < em.size(); ++i) {
            if (!(bob.coupling_time > em[i].coupling_time)) continue;
            if (em[i].coupling_strength == 0.0 || bob.coupling_strength == 0.0) continue;
            g[i] = 2.0 * bob.coupling_strength * em[i].coupling_strength * kernels_->commutator(em[i], bob);
        }
        return g;
    }

    double probability(const Detector& bob, bool couple) const {
        if (!(scenario_->evaluation_time > bob.coupling_time)) return 0.0;
        double e = 1.0;
        if (couple && scenario_->size() > 0)
            e = product_expectation(scenario_->emitter_state, angles(bob), phases_);
        return clamp_probability(0.5 * (1.0 - c1_ * e), "excitation probability");
    }

    ChannelPoint channel(const Detector& bob) const { return {probability(bob, true), probability(bob, false)}; }

private:
    const Scenario* scenario_;
    const K* kernels_;
    MonopolePhase phases_;
    double c1_;
};

/// Receiver excitation probability after all couplings that precede it.
template <KernelProvider K>
double excitation_probability(const Scenario& s, bool couple, const K& kernels) {
    return ReceiverModel<K>(s, kernels).probability(s.require_receiver(), couple);
}

inline double excitation_probability(const Scenario& s, bool couple) {
    return excitation_probability(s, couple, ContinuumKernels{});
}

template <KernelProvider K>
ChannelPoint channel_point(const Scenario& s, const K& kernels) {
    return ReceiverModel<K>(s, kernels).channel(s.require_receiver());
}

inline ChannelPoint channel_point(const Scenario& s) { return channel_point(s, ContinuumKernels{}); }

/// Energy density with the emitter-state correlations computed once.
template <KernelProvider K>
class EnergyModel {
public:
    EnergyModel(const Scenario& s, const K& kernels) : scenario_(&s), kernels_(&kernels) {
        validate(s);
        correlations_ = pair_correlations(s.emitter_state, MonopolePhase::of(s.emitters));
    }

    const std::vector<double>& correlations() const noexcept { return correlations_; }

    /// sum_j [ sum_i 4 lambda_i^2 (Im A_ij)^2 + 8 sum_{i<l} lambda_i lambda_l <mu_i mu_l> Im A_ij Im A_lj ]
    double operator()(const Vec3& x, double t) const {
        const auto& em = scenario_->emitters;
        const std::size_t n = em.size();
        if (n == 0) return 0.0;
        std::vector<std::array<double, 4>> a(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (em[i].coupling_strength == 0.0) {
                a[i] = {0.0, 0.0, 0.0, 0.0};
                continue;
            }
            a[i] = kernels_->radiation(em[i], x, t);
            for (auto& v : a[i]) v *= em[i].coupling_strength;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) total += 4.0 * a[i][j] * a[i][j];
            for (std::size_t l = i + 1; l < n; ++l) {
                const double c = correlations_[i * n + l];
                if (c == 0.0) continue;
                double dot = 0.0;
                for (int j = 0; j < 4; ++j) dot += a[i][j] * a[l][j];
                total += 8.0 * c * dot;
            }
        }
        return total;
    }

private:
    const Scenario* scenario_;
    const K* kernels_;
    std::vector<double> correlations_;
};

template <KernelProvider K>
double energy_density(const Scenario& s, const Vec3& x, double t, const K& kernels) {
    return EnergyModel<K>(s, kernels)(x, t);
}

inline double energy_density(const Scenario& s, const Vec3& x, double t) {
    return energy_density(s, x, t, ContinuumKernels{});
}

} // namespace qshock
