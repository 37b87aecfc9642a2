#pragma once

// Brute-force validator on a finite set of field modes.
//
// The field is replaced by phi = sum_m (c_m a_m^dag + c_m^* a_m), truncated at
// `cutoff` Fock levels per mode, and every delta coupling is applied as the
// exact unitary exp(-i lambda mu (x) phi_s). The closed-form pipeline runs
// on the same modes through ModeKernels, so differences isolate algebra
// from quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "emitters.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "observables.hpp"
#include "scenario.hpp"

namespace qshock::oracle {

struct Mode {
    Vec3 k;
    double weight = 1.0;
};

class ModeSet {
public:
    ModeSet() = default;
    ModeSet(std::vector<Mode> modes, std::size_t cutoff) : modes_(std::move(modes)), cutoff_(cutoff) {
        if (cutoff_ < 2) throw std::domain_error("ModeSet: cutoff must be >= 2");
        for (const auto& m : modes_) {
            if (!(m.weight > 0.0)) throw std::domain_error("ModeSet: weights must be positive");
            if (!(m.k.norm() > 0.0)) throw std::domain_error("ModeSet: momenta must be nonzero");
        }
    }

    std::size_t size() const noexcept { return modes_.size(); }
    std::size_t cutoff() const noexcept { return cutoff_; }
    const std::vector<Mode>& modes() const noexcept { return modes_; }

    ModeSet with_cutoff(std::size_t c) const { return ModeSet(modes_, c); }

    /// sqrt(w) alpha_s(k, x_d, t_d) for detector d.
    cplx coupling(std::size_t m, const Detector& d) const {
        const auto& mode = modes_[m];
        const double k = mode.k.norm();
        const double amp = std::sqrt(mode.weight) * sphere_form_factor(k, d.smearing_radius) /
                           std::sqrt(16.0 * kPi * kPi * kPi * k);
        return std::polar(amp, k * d.coupling_time - mode.k.dot(d.position));
    }

    /// sqrt(w) d_j [e^{i(|k| t - k.x)} / sqrt(16 pi^3 |k|)], j = 0 time, 1..3 space.
    cplx field_derivative(std::size_t m, const Vec3& x, double t, int j) const {
        const auto& mode = modes_[m];
        const double k = mode.k.norm();
        const cplx plane = std::polar(std::sqrt(mode.weight) / std::sqrt(16.0 * kPi * kPi * kPi * k),
                                      k * t - mode.k.dot(x));
        const double factor = j == 0 ? k : -mode.k[static_cast<std::size_t>(j - 1)];
        return cplx{0.0, factor} * plane;
    }

private:
    std::vector<Mode> modes_;
    std::size_t cutoff_ = 2;
};

/// Deterministic mode set: momenta of assorted magnitudes and directions,
/// weights chosen so that |c_m| = amplitude for a ball of radius R.
inline ModeSet make_modes(std::size_t count, double amplitude, std::size_t cutoff, double R = kDefaultRadius) {
    static constexpr std::array<double, 6> mags = {0.8, 1.3, 1.9, 2.6, 1.1, 3.3};
    static constexpr std::array<std::array<double, 3>, 6> dirs = {{
        {1.0, 0.0, 0.0}, {0.3, 0.9, 0.1}, {-0.6, 0.2, 0.75}, {0.1, -0.8, -0.5}, {0.5, 0.5, -0.7}, {-0.9, -0.3, 0.3}}};
    if (count > mags.size()) throw std::domain_error("make_modes: at most 6 modes");
    std::vector<Mode> modes;
    for (std::size_t m = 0; m < count; ++m) {
        Vec3 dir{dirs[m][0], dirs[m][1], dirs[m][2]};
        dir = dir * (1.0 / dir.norm());
        const double k = mags[m];
        const double unit = sphere_form_factor(k, R) / std::sqrt(16.0 * kPi * kPi * kPi * k);
        modes.push_back({dir * k, amplitude * amplitude / (unit * unit)});
    }
    return ModeSet(std::move(modes), cutoff);
}

/// Pipeline kernels with every momentum integral replaced by the mode sum.
class ModeKernels {
public:
    explicit ModeKernels(const ModeSet& modes) : modes_(&modes) {}

    double vacuum_variance(const Detector& d) const {
        double s = 0.0;
        for (std::size_t m = 0; m < modes_->size(); ++m) s += std::norm(modes_->coupling(m, d));
        return s;
    }

    double commutator(const Detector& a, const Detector& b) const {
        cplx s{0.0, 0.0};
        for (std::size_t m = 0; m < modes_->size(); ++m) s += modes_->coupling(m, a) * std::conj(modes_->coupling(m, b));
        return 2.0 * s.imag();
    }

    std::array<double, 4> radiation(const Detector& a, const Vec3& x, double t) const {
        std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
        if (!(t > a.coupling_time)) return out;
        for (int j = 0; j < 4; ++j) {
            cplx s{0.0, 0.0};
            for (std::size_t m = 0; m < modes_->size(); ++m)
                s += modes_->field_derivative(m, x, t, j) * std::conj(modes_->coupling(m, a));
            out[static_cast<std::size_t>(j)] = s.imag();
        }
        return out;
    }

private:
    const ModeSet* modes_;
};

static_assert(KernelProvider<ModeKernels>);

/// Default Hilbert-space budget (complex amplitudes per state vector).
inline constexpr std::size_t kDefaultBudget = std::size_t{1} << 16;

struct ExactOptions {
    std::size_t budget = kDefaultBudget;
    /// Application order of the emitters; empty means coupling-time order.
    std::vector<std::size_t> order;
};

struct ExactResult {
    double value = 0.0;
    /// max | ||psi|| - 1 | over the evolved components.
    double norm_drift = 0.0;
    std::size_t dimension = 0;
};

/// Qubits (most significant first) tensored with truncated modes.
class FockRegister {
public:
    FockRegister(std::size_t qubits, const ModeSet& modes, std::size_t budget)
        : qubits_(qubits), cutoff_(modes.cutoff()) {
        field_dim_ = 1;
        strides_.assign(modes.size(), 1);
        for (std::size_t m = modes.size(); m-- > 0;) {
            strides_[m] = field_dim_;
            if (field_dim_ > budget / cutoff_) throw BudgetError(required(qubits, modes), budget);
            field_dim_ *= cutoff_;
        }
        if ((std::size_t{1} << qubits_) > budget / field_dim_) throw BudgetError(required(qubits, modes), budget);
        dim_ = field_dim_ << qubits_;
    }

    static std::size_t required(std::size_t qubits, const ModeSet& modes) {
        double d = std::pow(2.0, static_cast<double>(qubits)) *
                   std::pow(static_cast<double>(modes.cutoff()), static_cast<double>(modes.size()));
        return d > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(d);
    }

    std::size_t dimension() const noexcept { return dim_; }

    std::vector<cplx> initial(std::span<const cplx> qubit_amplitudes) const {
        std::vector<cplx> psi(dim_, cplx{0.0, 0.0});
        for (std::size_t q = 0; q < qubit_amplitudes.size(); ++q) psi[q * field_dim_] = qubit_amplitudes[q];
        return psi;
    }

    /// out = mu_q (x) (sum_m c_m a_m^dag + c_m^* a_m) in
    void apply_coupling(std::span<const cplx> in, std::span<cplx> out, std::size_t q, double phase,
                        std::span<const cplx> c) const {
        std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
        const std::size_t bit = std::size_t{1} << (qubits_ - 1 - q);
        const std::size_t offset = bit * field_dim_;
        const cplx up = std::polar(1.0, phase), down = std::conj(up);
        for (std::size_t idx = 0; idx < dim_; ++idx) {
            const cplx v = in[idx];
            if (v == cplx{0.0, 0.0}) continue;
            const bool excited = ((idx / field_dim_) & bit) != 0;
            const std::size_t flipped = excited ? idx - offset : idx + offset;
            const cplx mu = excited ? down : up;
            const std::size_t f = idx % field_dim_;
            for (std::size_t m = 0; m < strides_.size(); ++m) {
                const std::size_t n = (f / strides_[m]) % cutoff_;
                if (n + 1 < cutoff_)
                    out[flipped + strides_[m]] += mu * c[m] * std::sqrt(static_cast<double>(n + 1)) * v;
                if (n > 0) out[flipped - strides_[m]] += mu * std::conj(c[m]) * std::sqrt(static_cast<double>(n)) * v;
            }
        }
    }

    /// out = sum_m b_m a_m in
    void apply_annihilation(std::span<const cplx> in, std::span<cplx> out, std::span<const cplx> b) const {
        std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
        for (std::size_t idx = 0; idx < dim_; ++idx) {
            const cplx v = in[idx];
            if (v == cplx{0.0, 0.0}) continue;
            const std::size_t f = idx % field_dim_;
            for (std::size_t m = 0; m < strides_.size(); ++m) {
                const std::size_t n = (f / strides_[m]) % cutoff_;
                if (n > 0) out[idx - strides_[m]] += b[m] * std::sqrt(static_cast<double>(n)) * v;
            }
        }
    }

    /// psi <- exp(-i lambda mu_q (x) phi) psi by a Taylor series on substeps.
    void evolve(std::vector<cplx>& psi, std::size_t q, double phase, std::span<const cplx> c, double lambda) const {
        if (lambda == 0.0 || c.empty()) return;
        double bound = 0.0;
        for (const auto& cm : c) bound += 2.0 * std::abs(cm) * std::sqrt(static_cast<double>(cutoff_));
        const double theta = std::abs(lambda) * bound;
        const int steps = std::max(1, static_cast<int>(std::ceil(theta / 0.5)));
        const cplx factor{0.0, -lambda / steps};
        std::vector<cplx> term(dim_), next(dim_), acc(dim_);
        for (int s = 0; s < steps; ++s) {
            term = psi;
            acc = psi;
            for (int k = 1; k < 200; ++k) {
                apply_coupling(term, next, q, phase, c);
                double norm2 = 0.0;
                const cplx f = factor / static_cast<double>(k);
                for (std::size_t i = 0; i < dim_; ++i) {
                    term[i] = f * next[i];
                    acc[i] += term[i];
                    norm2 += std::norm(term[i]);
                }
                if (norm2 < 1e-34) break;
                if (k == 199) throw NumericalError("oracle: Taylor series did not converge");
            }
            psi.swap(acc);
        }
    }

    /// Probability that qubit q is excited.
    double excited_probability(std::span<const cplx> psi, std::size_t q) const {
        const std::size_t bit = std::size_t{1} << (qubits_ - 1 - q);
        double p = 0.0;
        for (std::size_t idx = 0; idx < dim_; ++idx)
            if ((idx / field_dim_) & bit) p += std::norm(psi[idx]);
        return p;
    }

private:
    std::size_t qubits_;
    std::size_t cutoff_;
    std::size_t field_dim_ = 1;
    std::size_t dim_ = 1;
    std::vector<std::size_t> strides_;
};

namespace detail {

inline double norm_of(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

inline std::vector<std::size_t> application_order(const Scenario& s, const ExactOptions& opt) {
    if (!opt.order.empty()) {
        auto sorted = opt.order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (sorted[i] != i || sorted.size() != s.size())
                throw std::domain_error("oracle: order must be a permutation of the emitters");
        return opt.order;
    }
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return s.emitters[a].coupling_time < s.emitters[b].coupling_time;
    });
    return idx;
}

inline std::vector<cplx> couplings(const ModeSet& modes, const Detector& d) {
    std::vector<cplx> c(modes.size());
    for (std::size_t m = 0; m < modes.size(); ++m) c[m] = modes.coupling(m, d);
    return c;
}

} // namespace detail

/// Receiver excitation probability by exact evolution of qubits and modes.
inline ExactResult exact_probability(const ModeSet& modes, const Scenario& s, bool couple,
                                     const ExactOptions& opt = {}) {
    validate(s);
    const Detector& bob = s.require_receiver();
    const std::size_t n = s.size();
    FockRegister reg(n + 1, modes, opt.budget);
    ExactResult out{0.0, 0.0, reg.dimension()};
    if (!(s.evaluation_time > bob.coupling_time)) return out;

    // Emitters that couple before the receiver (in the requested order), the
    // receiver, then the remaining emitters up to the evaluation time.
    struct Step {
        std::size_t qubit;
        const Detector* det;
    };
    std::vector<Step> steps, later;
    for (std::size_t i : detail::application_order(s, opt)) {
        const auto& e = s.emitters[i];
        if (!couple || !(s.evaluation_time > e.coupling_time)) continue;
        (e.coupling_time < bob.coupling_time ? steps : later).push_back({i, &e});
    }
    steps.push_back({n, &bob});
    steps.insert(steps.end(), later.begin(), later.end());

    for (const auto& comp : s.emitter_state.components()) {
        // Emitter amplitudes tensored with the receiver's ground state.
        std::vector<cplx> qubit_amps(comp.amplitudes.size() * 2, cplx{0.0, 0.0});
        for (std::size_t a = 0; a < comp.amplitudes.size(); ++a) qubit_amps[2 * a] = comp.amplitudes[a];
        auto psi = reg.initial(qubit_amps);
        for (const auto& st : steps) {
            const auto c = detail::couplings(modes, *st.det);
            reg.evolve(psi, st.qubit, st.det->monopole_phase(), c, st.det->coupling_strength);
        }
        out.norm_drift = std::max(out.norm_drift, std::abs(detail::norm_of(psi) - 1.0));
        out.value += comp.weight * reg.excited_probability(psi, n);
    }
    return out;
}

/// Normal-ordered (d_0 phi)^2 + sum_j (d_j phi)^2 at (x, t) after the
/// emitters that coupled before t.
inline ExactResult exact_energy(const ModeSet& modes, const Scenario& s, const Vec3& x, double t,
                                const ExactOptions& opt = {}) {
    validate(s);
    const std::size_t n = s.size();
    FockRegister reg(n, modes, opt.budget);
    ExactResult out{0.0, 0.0, reg.dimension()};
    std::array<std::vector<cplx>, 4> b;
    for (int j = 0; j < 4; ++j) {
        b[j].resize(modes.size());
        for (std::size_t m = 0; m < modes.size(); ++m) b[j][m] = std::conj(modes.field_derivative(m, x, t, j));
    }
    std::vector<cplx> once(reg.dimension()), twice(reg.dimension());
    for (const auto& comp : s.emitter_state.components()) {
        auto psi = reg.initial(comp.amplitudes);
        for (std::size_t i : detail::application_order(s, opt)) {
            const auto& e = s.emitters[i];
            if (!(t > e.coupling_time)) continue;
            reg.evolve(psi, i, e.monopole_phase(), detail::couplings(modes, e), e.coupling_strength);
        }
        out.norm_drift = std::max(out.norm_drift, std::abs(detail::norm_of(psi) - 1.0));
        // <:(B + B^dag)^2:> = 2 Re <B^2> + 2 <B^dag B>, B the annihilation part.
        double energy = 0.0;
        for (int j = 0; j < 4; ++j) {
            reg.apply_annihilation(psi, once, b[j]);
            reg.apply_annihilation(once, twice, b[j]);
            cplx bb{0.0, 0.0};
            double nb = 0.0;
            for (std::size_t k = 0; k < psi.size(); ++k) {
                bb += std::conj(psi[k]) * twice[k];
                nb += std::norm(once[k]);
            }
            energy += 2.0 * bb.real() + 2.0 * nb;
        }
        out.value += comp.weight * energy;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Standard comparison suite.

enum class CaseKind { probability_couple, probability_silent, energy };

inline const char* to_string(CaseKind k) {
    switch (k) {
    case CaseKind::probability_couple: return "p (couple)";
    case CaseKind::probability_silent: return "p (silent)";
    case CaseKind::energy: return "energy";
    }
    return "?";
}

struct OracleCase {
    std::string name;
    CaseKind kind;
    Scenario scenario;
    ModeSet modes;
    Vec3 point;
    double time = 0.0;
};

struct OracleOutcome {
    std::string name;
    double pipeline = 0.0;
    double exact = 0.0;
    /// |exact(cutoff) - exact(cutoff - 2)|
    double cutoff_change = 0.0;
    std::size_t cutoff = 0;
    double norm_drift = 0.0;
    double tolerance = 0.0;
    bool converged = false;

    double difference() const { return std::abs(pipeline - exact); }
    bool passed() const { return converged && difference() <= tolerance && norm_drift <= 1e-12; }
};

/// Pipeline value on the case's modes (no Fock space involved).
inline double pipeline_value(const OracleCase& c) {
    const ModeKernels k(c.modes);
    switch (c.kind) {
    case CaseKind::probability_couple: return excitation_probability(c.scenario, true, k);
    case CaseKind::probability_silent: return excitation_probability(c.scenario, false, k);
    case CaseKind::energy: return energy_density(c.scenario, c.point, c.time, k);
    }
    return 0.0;
}

inline ExactResult exact_value(const OracleCase& c, const ModeSet& modes, const ExactOptions& opt = {}) {
    switch (c.kind) {
    case CaseKind::probability_couple: return exact_probability(modes, c.scenario, true, opt);
    case CaseKind::probability_silent: return exact_probability(modes, c.scenario, false, opt);
    case CaseKind::energy: return exact_energy(modes, c.scenario, c.point, c.time, opt);
    }
    return {};
}

/// Raises the cutoff in steps of 2 until consecutive exact values agree to
/// `tol`, then compares the finer one with the pipeline.
inline OracleOutcome run_case(const OracleCase& c, double tol = 1e-6, std::size_t budget = std::size_t{1} << 18,
                              std::size_t max_cutoff = 64) {
    OracleOutcome o;
    o.name = c.name;
    o.tolerance = tol;
    o.pipeline = pipeline_value(c);
    ExactOptions opt;
    opt.budget = budget;
    std::size_t cutoff = c.modes.cutoff();
    double previous = exact_value(c, c.modes.with_cutoff(cutoff), opt).value;
    while (cutoff + 2 <= max_cutoff) {
        const auto finer = c.modes.with_cutoff(cutoff + 2);
        ExactResult r;
        try {
            r = exact_value(c, finer, opt);
        } catch (const BudgetError&) {
            break;
        }
        o.cutoff = cutoff + 2;
        o.exact = r.value;
        o.norm_drift = r.norm_drift;
        o.cutoff_change = std::abs(r.value - previous);
        if (o.cutoff_change < tol) {
            o.converged = true;
            break;
        }
        previous = r.value;
        cutoff += 2;
    }
    return o;
}

namespace detail {

inline Detector alice(double x, double y, double t, double lambda = 1.0) {
    Detector d;
    d.position = {x, y, 0.0};
    d.coupling_time = t;
    d.coupling_strength = lambda;
    return d;
}

inline Scenario make_scenario(std::vector<Detector> alices, EmitterState state, double lambda_b = 1.0) {
    Scenario s;
    s.emitters = std::move(alices);
    Detector bob;
    bob.position = {1.1, 0.7, -0.4};
    bob.coupling_time = 2.5;
    bob.coupling_strength = lambda_b;
    s.receiver = bob;
    s.emitter_state = std::move(state);
    s.evaluation_time = 3.0;
    return s;
}

} // namespace detail

/// Cases spanning one to three emitters, W / classical / product states,
/// coupling and silent runs, and one to four modes; plus discrete energy
/// densities for one and two emitters.
inline std::vector<OracleCase> standard_cases() {
    using detail::alice;
    using detail::make_scenario;
    const double pi = std::numbers::pi;
    std::vector<OracleCase> cases;
    auto prob = [&](std::string name, bool couple, Scenario s, std::size_t modes, double amp) {
        cases.push_back({std::move(name), couple ? CaseKind::probability_couple : CaseKind::probability_silent,
                         std::move(s), make_modes(modes, amp, 4), {}, 0.0});
    };
    const std::vector<Detector> one = {alice(0.0, 0.0, 0.5)};
    const std::vector<Detector> two = {alice(0.0, 0.0, 0.5), alice(0.8, -0.3, 1.0, 0.8)};
    const std::vector<Detector> three = {alice(0.0, 0.0, 0.5), alice(0.8, -0.3, 1.0, 0.8), alice(-0.5, 0.9, 1.6, 1.2)};
    const std::vector<double> th2 = {0.0, 0.7}, th3 = {0.0, pi / 2, pi};
    const std::vector<double> ang2 = {0.6, 1.1}, ph2 = {0.3, -0.9};
    const std::vector<double> ang3 = {0.4, 1.3, 0.9}, ph3 = {0.0, 2.1, -0.6};
    const std::vector<double> ang1 = {0.7}, ph1 = {1.4};

    prob("1 alice, W, couple, 1 mode", true, make_scenario(one, w_state(1)), 1, 0.35);
    prob("1 alice, product, couple, 2 modes", true, make_scenario(one, product_state(ang1, ph1)), 2, 0.3);
    prob("1 alice, classical, silent, 1 mode", false, make_scenario(one, classical_mixture(1)), 1, 0.35);
    prob("2 alices, W, couple, 2 modes", true, make_scenario(two, w_state(2, th2)), 2, 0.3);
    prob("2 alices, classical, couple, 3 modes", true, make_scenario(two, classical_mixture(2)), 3, 0.22);
    prob("2 alices, product, couple, 4 modes", true, make_scenario(two, product_state(ang2, ph2)), 4, 0.16);
    prob("2 alices, W, silent, 3 modes", false, make_scenario(two, w_state(2, th2)), 3, 0.22);
    prob("3 alices, W, couple, 3 modes", true, make_scenario(three, w_state(3, th3)), 3, 0.2);
    prob("3 alices, classical, couple, 2 modes", true, make_scenario(three, classical_mixture(3)), 2, 0.25);
    prob("3 alices, product, couple, 4 modes", true, make_scenario(three, product_state(ang3, ph3)), 4, 0.14);
    prob("3 alices, W, couple, 4 modes", true, make_scenario(three, w_state(3, th3)), 4, 0.14);
    prob("3 alices, product, silent, 2 modes", false, make_scenario(three, product_state(ang3, ph3)), 2, 0.25);
    prob("3 alices, classical, silent, 1 mode", false, make_scenario(three, classical_mixture(3)), 1, 0.35);

    auto energy = [&](std::string name, Scenario s, std::size_t modes, double amp) {
        cases.push_back({std::move(name), CaseKind::energy, std::move(s), make_modes(modes, amp, 4),
                         Vec3{0.9, -0.2, 0.3}, 2.2});
    };
    const std::vector<double> zero1 = {0.0};
    energy("energy, 1 emitter ground, 1 mode", make_scenario(one, product_state(zero1, zero1)), 1, 0.4);
    energy("energy, 1 emitter excited, 3 modes", make_scenario(one, w_state(1)), 3, 0.3);
    energy("energy, 1 emitter product, 4 modes", make_scenario(one, product_state(ang1, ph1)), 4, 0.25);
    energy("energy, 2 emitters W, 2 modes", make_scenario(two, w_state(2, th2)), 2, 0.3);
    energy("energy, 2 emitters classical, 3 modes", make_scenario(two, classical_mixture(2)), 3, 0.25);
    return cases;
}

} // namespace qshock::oracle
