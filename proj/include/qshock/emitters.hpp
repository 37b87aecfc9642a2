#pragma once

// Expectation values of monopole-operator products over the emitter state.
//
// mu_i = sigma+ e^{i phi_i} + sigma- e^{-i phi_i}, phi_i = Omega_i t_i, with
// sigma+ = |e><g|. All operators act on different qubits and commute.

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "scenario.hpp"

namespace qshock {

/// Per-emitter interaction-picture phases Omega_i t_i.
struct MonopolePhase {
    std::vector<double> phases;

    static MonopolePhase of(std::span<const Detector> emitters) {
        MonopolePhase m;
        m.phases.reserve(emitters.size());
        for (const auto& e : emitters) m.phases.push_back(e.monopole_phase());
        return m;
    }

    static MonopolePhase zeros(std::size_t n) { return {std::vector<double>(n, 0.0)}; }

    std::size_t size() const noexcept { return phases.size(); }
};

/// 2x2 matrix of mu in the basis (|g>, |e>), row-major.
inline std::array<cplx, 4> monopole_matrix(double phase) {
    const cplx up = std::polar(1.0, phase);
    return {cplx{0.0, 0.0}, std::conj(up), up, cplx{0.0, 0.0}};
}

namespace detail {

/// out = mu_i psi
inline void apply_monopole(std::span<const cplx> psi, std::span<cplx> out, std::size_t n, std::size_t i,
                           double phase) {
    const std::size_t bit = excited_index(n, i);
    const cplx up = std::polar(1.0, phase);
    const cplx down = std::conj(up);
    for (std::size_t idx = 0; idx < psi.size(); ++idx) {
        if (idx & bit) continue;
        out[idx | bit] = up * psi[idx];
        out[idx] = down * psi[idx | bit];
    }
}

/// psi <- (cos g + i sin g mu_i) psi, in place.
inline void apply_rotation(std::span<cplx> psi, std::size_t n, std::size_t i, double g, double phase) {
    const std::size_t bit = excited_index(n, i);
    const cplx c{std::cos(g), 0.0};
    const cplx is = cplx{0.0, std::sin(g)};
    const cplx up = is * std::polar(1.0, phase);
    const cplx down = is * std::polar(1.0, -phase);
    for (std::size_t idx = 0; idx < psi.size(); ++idx) {
        if (idx & bit) continue;
        const cplx a0 = psi[idx], a1 = psi[idx | bit];
        psi[idx] = c * a0 + down * a1;
        psi[idx | bit] = c * a1 + up * a0;
    }
}

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
    cplx s{0.0, 0.0};
    for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
    return s;
}

inline void require_phases(const EmitterState& state, const MonopolePhase& phases) {
    if (phases.size() != state.qubits())
        throw std::domain_error("need one monopole phase per emitter");
}

} // namespace detail

/// <mu_i mu_l> for i != l.
inline double pair_correlation(const EmitterState& state, std::size_t i, std::size_t l,
                               const MonopolePhase& phases) {
    const std::size_t n = state.qubits();
    detail::require_phases(state, phases);
    if (i >= n || l >= n) throw std::domain_error("pair_correlation: index out of range");
    if (i == l) throw std::domain_error("pair_correlation: indices must differ (mu^2 = 1)");
    double total = 0.0;
    std::vector<cplx> a(state.dimension()), b(state.dimension());
    for (const auto& comp : state.components()) {
        detail::apply_monopole(comp.amplitudes, a, n, l, phases.phases[l]);
        detail::apply_monopole(a, b, n, i, phases.phases[i]);
        total += comp.weight * detail::inner(comp.amplitudes, b).real();
    }
    return total;
}

/// All pair correlations as a symmetric n x n row-major matrix with unit
/// diagonal.
inline std::vector<double> pair_correlations(const EmitterState& state, const MonopolePhase& phases) {
    const std::size_t n = state.qubits();
    std::vector<double> m(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = i + 1; l < n; ++l) m[i * n + l] = m[l * n + i] = pair_correlation(state, i, l, phases);
    return m;
}

/// E = Re < prod_i (cos g_i + i mu_i sin g_i) >.
inline double product_expectation(const EmitterState& state, std::span<const double> g,
                                  const MonopolePhase& phases) {
    const std::size_t n = state.qubits();
    if (g.size() != n) throw std::domain_error("product_expectation: need one angle per emitter");
    detail::require_phases(state, phases);
    double total = 0.0;
    std::vector<cplx> work(state.dimension());
    for (const auto& comp : state.components()) {
        std::copy(comp.amplitudes.begin(), comp.amplitudes.end(), work.begin());
        for (std::size_t i = 0; i < n; ++i)
            if (g[i] != 0.0) detail::apply_rotation(work, n, i, g[i], phases.phases[i]);
        total += comp.weight * detail::inner(comp.amplitudes, work).real();
    }
    return total;
}

} // namespace qshock
