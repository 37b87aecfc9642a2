#pragma once

// Data model: detectors, emitter states and the scenario that ties them
// together. Natural units (hbar = c = 1) throughout.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qshock {

using cplx = std::complex<double>;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr bool operator==(const Vec3&) const = default;
};

inline constexpr double kDefaultRadius = 0.5;
inline constexpr double kDefaultGap = 2.0;

/// A two-level system at rest, coupled to the field by a delta pulse at
/// `coupling_time` through a uniform ball of radius `smearing_radius`.
struct Detector {
    Vec3 position;
    double coupling_time = 0.0;
    double coupling_strength = 0.0;
    double gap = kDefaultGap;
    double smearing_radius = kDefaultRadius;

    /// Phase Omega * t entering mu(t) = sigma+ e^{i Omega t} + sigma- e^{-i Omega t}.
    double monopole_phase() const { return gap * coupling_time; }
};

inline void validate(const Detector& d, const std::string& field) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(d.position.x) || !finite(d.position.y) || !finite(d.position.z))
        throw ValidationError(field + ".position", "must be finite");
    if (!finite(d.coupling_time)) throw ValidationError(field + ".time", "must be finite");
    if (!finite(d.gap)) throw ValidationError(field + ".gap", "must be finite");
    if (!(d.coupling_strength >= 0.0) || !finite(d.coupling_strength))
        throw ValidationError(field + ".lambda", "must be finite and >= 0");
    if (!(d.smearing_radius > 0.0) || !finite(d.smearing_radius))
        throw ValidationError(field + ".radius", "must be finite and > 0");
}

inline constexpr std::size_t kMaxEmitters = 24;
inline constexpr double kStateTolerance = 1e-12;

/// Emitter-side quantum state over n qubits. Basis index bit (n-1-i) holds
/// emitter i (emitter 0 is the most significant qubit); 1 means excited.
/// Mixed states are kept as weighted pure components.
class EmitterState {
public:
    struct Component {
        double weight;
        std::vector<cplx> amplitudes;
    };

    static EmitterState pure(std::size_t n, std::vector<cplx> amplitudes) {
        return EmitterState(n, {{1.0, std::move(amplitudes)}}, false);
    }

    static EmitterState mixture(std::size_t n, std::vector<Component> components) {
        return EmitterState(n, std::move(components), true);
    }

    /// Pure state of zero qubits; used by vacuum-only scenarios.
    static EmitterState empty() { return pure(0, {cplx{1.0, 0.0}}); }

    std::size_t qubits() const noexcept { return n_; }
    std::size_t dimension() const noexcept { return std::size_t{1} << n_; }
    bool is_mixed() const noexcept { return mixed_; }
    std::span<const Component> components() const noexcept { return components_; }

private:
    EmitterState(std::size_t n, std::vector<Component> comps, bool mixed)
        : n_(n), components_(std::move(comps)), mixed_(mixed) {
        if (n_ > kMaxEmitters)
            throw ValidationError("state", "at most " + std::to_string(kMaxEmitters) + " emitters");
        if (components_.empty()) throw ValidationError("state", "no components");
        double wsum = 0.0;
        for (std::size_t c = 0; c < components_.size(); ++c) {
            const auto& comp = components_[c];
            const std::string field = "state.components[" + std::to_string(c) + "]";
            if (comp.amplitudes.size() != dimension())
                throw ValidationError(field, "expected " + std::to_string(dimension()) +
                                                 " amplitudes, got " +
                                                 std::to_string(comp.amplitudes.size()));
            if (!(comp.weight >= 0.0)) throw ValidationError(field + ".weight", "must be >= 0");
            double norm2 = 0.0;
            for (const auto& a : comp.amplitudes) norm2 += std::norm(a);
            if (!(std::abs(std::sqrt(norm2) - 1.0) <= kStateTolerance))
                throw ValidationError(field, "amplitude vector is not normalized");
            wsum += comp.weight;
        }
        if (!(std::abs(wsum - 1.0) <= kStateTolerance))
            throw ValidationError("state", "mixture weights must sum to 1");
    }

    std::size_t n_;
    std::vector<Component> components_;
    bool mixed_;
};

inline std::size_t excited_index(std::size_t n, std::size_t emitter) {
    return std::size_t{1} << (n - 1 - emitter);
}

/// Equal-weight coherent superposition of the single-excitation states with
/// amplitude e^{i phases[m]} / sqrt(n) on "only emitter m excited".
inline EmitterState w_state(std::size_t n, std::span<const double> phases) {
    if (n == 0) throw std::domain_error("w_state: n must be >= 1");
    if (phases.size() != n) throw std::domain_error("w_state: need one phase per emitter");
    if (n > kMaxEmitters) throw std::domain_error("w_state: too many emitters");
    std::vector<cplx> amps(std::size_t{1} << n, cplx{0.0, 0.0});
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t m = 0; m < n; ++m) amps[excited_index(n, m)] = std::polar(scale, phases[m]);
    return EmitterState::pure(n, std::move(amps));
}

inline EmitterState w_state(std::size_t n) {
    std::vector<double> zeros(n, 0.0);
    return w_state(n, zeros);
}

/// The incoherent counterpart of w_state: weight 1/n on each single excitation.
inline EmitterState classical_mixture(std::size_t n) {
    if (n == 0) throw std::domain_error("classical_mixture: n must be >= 1");
    if (n > kMaxEmitters) throw std::domain_error("classical_mixture: too many emitters");
    std::vector<EmitterState::Component> comps;
    comps.reserve(n);
    for (std::size_t m = 0; m < n; ++m) {
        std::vector<cplx> amps(std::size_t{1} << n, cplx{0.0, 0.0});
        amps[excited_index(n, m)] = 1.0;
        comps.push_back({1.0 / static_cast<double>(n), std::move(amps)});
    }
    return EmitterState::mixture(n, std::move(comps));
}

/// Tensor product of single-qubit states cos(a)|g> + e^{i b} sin(a)|e>.
inline EmitterState product_state(std::span<const double> excitation_angles,
                                  std::span<const double> relative_phases) {
    const std::size_t n = excitation_angles.size();
    if (relative_phases.size() != n) throw std::domain_error("product_state: size mismatch");
    std::vector<cplx> amps(std::size_t{1} << n, cplx{1.0, 0.0});
    for (std::size_t idx = 0; idx < amps.size(); ++idx) {
        for (std::size_t i = 0; i < n; ++i) {
            const bool excited = (idx & excited_index(n, i)) != 0;
            amps[idx] *= excited ? std::sin(excitation_angles[i]) * std::exp(cplx{0.0, relative_phases[i]})
                                 : cplx{std::cos(excitation_angles[i]), 0.0};
        }
    }
    return EmitterState::pure(n, std::move(amps));
}

struct Scenario {
    std::vector<Detector> emitters;
    std::optional<Detector> receiver;
    EmitterState emitter_state = EmitterState::empty();
    double evaluation_time = 0.0;

    std::size_t size() const noexcept { return emitters.size(); }

    double latest_coupling() const {
        double t = -std::numeric_limits<double>::infinity();
        for (const auto& e : emitters) t = std::max(t, e.coupling_time);
        if (receiver) t = std::max(t, receiver->coupling_time);
        return t;
    }

    const Detector& require_receiver() const {
        if (!receiver) throw ValidationError("receiver", "this operation needs a receiver");
        return *receiver;
    }
};

inline void validate(const Scenario& s) {
    for (std::size_t i = 0; i < s.emitters.size(); ++i)
        validate(s.emitters[i], "emitters[" + std::to_string(i) + "]");
    if (s.receiver) validate(*s.receiver, "receiver");
    if (s.emitter_state.qubits() != s.emitters.size())
        throw ValidationError("state", "state has " + std::to_string(s.emitter_state.qubits()) +
                                           " qubits but there are " +
                                           std::to_string(s.emitters.size()) + " emitters");
    if (!std::isfinite(s.evaluation_time))
        throw ValidationError("evaluation_time", "must be finite");
}

} // namespace qshock
