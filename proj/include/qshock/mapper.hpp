#pragma once

// Planar maps of the energy density and the channel capacity, difference
// maps, receiver-coupling sweeps and a multi-start phase optimizer.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "observables.hpp"
#include "parallel.hpp"
#include "scenario.hpp"

namespace qshock {

enum class Quantity { energy, capacity, delta };

inline const char* to_string(Quantity q) {
    switch (q) {
    case Quantity::energy: return "energy";
    case Quantity::capacity: return "capacity";
    case Quantity::delta: return "delta";
    }
    return "?";
}

inline Quantity parse_quantity(const std::string& s) {
    if (s == "energy") return Quantity::energy;
    if (s == "capacity") return Quantity::capacity;
    if (s == "delta") return Quantity::delta;
    throw std::invalid_argument("unknown quantity '" + s + "'");
}

/// n evenly spaced samples from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw std::domain_error("linspace: need at least 2 samples");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = hi;
    return v;
}

/// Rectangle in the plane z = const with nx x ny samples.
struct Window {
    double x_min = 0.0, x_max = 16.0;
    double y_min = 0.0, y_max = 16.0;
    std::size_t nx = 160, ny = 160;
    double z = 0.0;

    void validate() const {
        if (nx < 2 || ny < 2) throw ValidationError("window", "resolution must be >= 2 per axis");
        for (double v : {x_min, x_max, y_min, y_max, z})
            if (!std::isfinite(v)) throw ValidationError("window", "bounds must be finite");
        if (!(x_max > x_min) || !(y_max > y_min)) throw ValidationError("window", "empty range");
    }

    std::vector<double> xs() const { return linspace(x_min, x_max, nx); }
    std::vector<double> ys() const { return linspace(y_min, y_max, ny); }
};

/// values[j * x.size() + i] belongs to (x[i], y[j]).
struct GridMap {
    std::vector<double> x, y;
    std::vector<double> values;
    Quantity quantity = Quantity::energy;
    std::string fingerprint;

    double operator()(std::size_t i, std::size_t j) const { return values[j * x.size() + i]; }
    double& operator()(std::size_t i, std::size_t j) { return values[j * x.size() + i]; }

    void check() const {
        if (x.empty() || y.empty() || values.size() != x.size() * y.size())
            throw std::domain_error("GridMap: value matrix does not match the axes");
        for (double v : values)
            if (!std::isfinite(v)) throw NumericalError("GridMap: non-finite value");
    }

    /// Index of the largest value (first in row-major order on ties).
    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    }
    double max() const { return *std::max_element(values.begin(), values.end()); }
    double min() const { return *std::min_element(values.begin(), values.end()); }
};

struct MapOptions {
    unsigned threads = 0;
    double cell_tolerance = 1e-6;
    double verify_tolerance = 1e-8;
    /// Fraction of cells with the largest |value| recomputed at verify_tolerance.
    double verify_fraction = 0.01;
    /// Abort when more than this fraction of cells fails.
    double max_failed_fraction = 0.001;
    QuadratureStrategy strategy = QuadratureStrategy::split_tail;
};

struct MapReport {
    std::size_t cells = 0;
    std::size_t verified = 0;
    /// Largest |fine - coarse| over re-verified cells.
    double max_verify_change = 0.0;
    /// Cells that failed at both tolerances; their value is set to 0.
    std::vector<std::size_t> failed_cells;
    double wall_seconds = 0.0;
};

namespace detail {

inline KernelSettings map_settings(const MapOptions& opt, double tol) {
    KernelSettings s;
    s.rel_tol = tol;
    s.strategy = opt.strategy;
    return s;
}

/// make(kernels) must return a callable (x, y) -> double.
template <class Make>
GridMap evaluate_map(const Scenario& s, const Window& w, Quantity q, const MapOptions& opt, MapReport* report,
                     Make make) {
    const auto start = std::chrono::steady_clock::now();
    validate(s);
    w.validate();
    GridMap map;
    map.x = w.xs();
    map.y = w.ys();
    map.quantity = q;
    map.fingerprint = fingerprint(s);
    const std::size_t nx = map.x.size(), n = nx * map.y.size();
    map.values.assign(n, 0.0);
    std::vector<char> failed(n, 0);

    const KernelSet coarse_set(map_settings(opt, opt.cell_tolerance));
    const ContinuumKernels coarse(coarse_set);
    {
        const auto cell = make(coarse);
        parallel_for(n, opt.threads, [&](std::size_t c) {
            try {
                map.values[c] = cell(map.x[c % nx], map.y[c / nx]);
            } catch (const NumericalError&) {
                failed[c] = 1;
            }
        });
    }
    const auto n_failed = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
    if (static_cast<double>(n_failed) > opt.max_failed_fraction * static_cast<double>(n))
        throw NumericalError("map aborted: " + std::to_string(n_failed) + " of " + std::to_string(n) +
                             " cells failed at tolerance " + std::to_string(opt.cell_tolerance));

    // Failed cells plus the most extreme ones get the fine tolerance.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (failed[a] != failed[b]) return failed[a] > failed[b];
        return std::abs(map.values[a]) > std::abs(map.values[b]);
    });
    const auto top = static_cast<std::size_t>(std::ceil(opt.verify_fraction * static_cast<double>(n)));
    order.resize(std::min(n, n_failed + top));

    const KernelSet fine_set(map_settings(opt, opt.verify_tolerance));
    const ContinuumKernels fine(fine_set);
    std::vector<double> change(order.size(), 0.0);
    std::vector<char> still_failed(order.size(), 0);
    {
        const auto cell = make(fine);
        parallel_for(order.size(), opt.threads, [&](std::size_t k) {
            const std::size_t c = order[k];
            try {
                const double v = cell(map.x[c % nx], map.y[c / nx]);
                if (!failed[c]) change[k] = std::abs(v - map.values[c]);
                map.values[c] = v;
            } catch (const NumericalError&) {
                still_failed[k] = 1;
                map.values[c] = 0.0;
            }
        });
    }
    map.check();
    if (report) {
        report->cells = n;
        report->verified = order.size();
        report->max_verify_change = change.empty() ? 0.0 : *std::max_element(change.begin(), change.end());
        report->failed_cells.clear();
        for (std::size_t k = 0; k < order.size(); ++k)
            if (still_failed[k]) report->failed_cells.push_back(order[k]);
        std::sort(report->failed_cells.begin(), report->failed_cells.end());
        report->wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return map;
}

} // namespace detail

/// Energy density on the window at the scenario's evaluation time.
inline GridMap energy_map(const Scenario& s, const Window& w, const MapOptions& opt = {}, MapReport* report = nullptr) {
    const double z = w.z, t = s.evaluation_time;
    return detail::evaluate_map(s, w, Quantity::energy, opt, report, [&](const ContinuumKernels& k) {
        return [model = EnergyModel<ContinuumKernels>(s, k), z, t](double x, double y) {
            return model(Vec3{x, y, z}, t);
        };
    });
}

/// Channel capacity with the receiver moved to each cell of the window.
inline GridMap capacity_map(const Scenario& s, const Window& w, const MapOptions& opt = {},
                            MapReport* report = nullptr) {
    const Detector bob = s.require_receiver();
    const double z = w.z;
    return detail::evaluate_map(s, w, Quantity::capacity, opt, report, [&](const ContinuumKernels& k) {
        return [model = ReceiverModel<ContinuumKernels>(s, k), bob, z](double x, double y) {
            Detector b = bob;
            b.position = {x, y, z};
            return channel_capacity(model.channel(b));
        };
    });
}

/// Cellwise a - b.
inline GridMap diff_map(const GridMap& a, const GridMap& b) {
    a.check();
    b.check();
    if (a.x != b.x || a.y != b.y) throw std::domain_error("diff_map: axes differ");
    if (a.quantity != b.quantity) throw std::domain_error("diff_map: cannot subtract different quantities");
    GridMap d;
    d.x = a.x;
    d.y = a.y;
    d.quantity = Quantity::delta;
    d.fingerprint = fnv1a_hex(a.fingerprint + "-" + b.fingerprint);
    d.values.resize(a.values.size());
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
    return d;
}

struct SweepCurve {
    std::vector<double> parameters;
    std::vector<double> capacities;
    std::size_t argmax = 0;
    double max = 0.0;
};

/// Capacity as a function of the receiver's coupling strength.
inline SweepCurve coupling_sweep(const Scenario& s, const std::vector<double>& lambda_b, unsigned threads = 0,
                                 const KernelSet& kernels = default_kernels()) {
    if (lambda_b.size() < 3) throw std::domain_error("coupling_sweep: need more than 2 samples");
    for (double v : lambda_b)
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error("coupling_sweep: samples must be finite and >= 0");
    validate(s);
    s.require_receiver();
    SweepCurve c;
    c.parameters = lambda_b;
    c.capacities.assign(lambda_b.size(), 0.0);
    const ContinuumKernels k(kernels);
    parallel_for(lambda_b.size(), threads, [&](std::size_t i) {
        Scenario local = s;
        local.receiver->coupling_strength = lambda_b[i];
        c.capacities[i] = channel_capacity(channel_point(local, k));
    });
    c.argmax = static_cast<std::size_t>(std::max_element(c.capacities.begin(), c.capacities.end()) -
                                        c.capacities.begin());
    c.max = c.capacities[c.argmax];
    return c;
}

// ---------------------------------------------------------------------------
// Phase optimization.

enum class Objective { energy, capacity };

struct OptimizeTarget {
    Objective kind = Objective::capacity;
    /// Field point (energy) or receiver position (capacity).
    Vec3 point;
};

struct OptimizeOptions {
    std::size_t restarts = 4;
    /// Total objective evaluations, shared evenly between restarts.
    std::size_t budget = 4000;
    double ftol = 1e-11;
    double xtol = 1e-7;
    double initial_step = 0.8;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    /// Explicit starting phase vectors, used before random ones.
    std::vector<std::vector<double>> starts;
};

struct TraceEntry {
    std::size_t restart = 0;
    std::size_t evaluation = 0;
    std::vector<double> phases;
    double value = 0.0;
};

struct OptimizeResult {
    std::vector<double> phases;
    double value = 0.0;
    /// Every restart met its stopping criterion within its share of the budget.
    bool converged = false;
    std::size_t evaluations = 0;
    std::vector<double> restart_values;
    std::vector<TraceEntry> trace;
};

inline double wrap_phase(double v) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    v = std::fmod(v, two_pi);
    if (v < 0.0) v += two_pi;
    if (v >= two_pi) v = 0.0;
    return v;
}

/// Objective value for a W state with the given phases.
inline double phase_objective(const Scenario& s, const OptimizeTarget& target, const std::vector<double>& theta,
                              const ContinuumKernels& k = {}) {
    Scenario local = s;
    local.emitter_state = w_state(s.size(), theta);
    if (target.kind == Objective::energy) return EnergyModel<ContinuumKernels>(local, k)(target.point, s.evaluation_time);
    local.receiver = s.require_receiver();
    local.receiver->position = target.point;
    return channel_capacity(channel_point(local, k));
}

namespace detail {

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false;
};

/// Minimizes f from x0 with at most max_eval evaluations.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double step, std::size_t max_eval, double ftol,
                             double xtol) {
    const std::size_t d = x0.size();
    std::vector<std::vector<double>> p(d + 1, x0);
    std::vector<double> fv(d + 1);
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };
    for (std::size_t i = 0; i < d; ++i) p[i + 1][i] += step;
    for (std::size_t i = 0; i <= d; ++i) fv[i] = eval(p[i]);

    std::vector<std::size_t> idx(d + 1);
    bool converged = false;
    while (true) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = idx.front(), worst = idx.back(), second = idx[d - 1];
        double diameter = 0.0;
        for (std::size_t i = 0; i <= d; ++i)
            for (std::size_t j = 0; j < d; ++j) diameter = std::max(diameter, std::abs(p[i][j] - p[best][j]));
        if (fv[worst] - fv[best] <= ftol * (1.0 + std::abs(fv[best])) && diameter <= xtol) {
            converged = true;
            break;
        }
        if (evals + 2 > max_eval) break;

        std::vector<double> centroid(d, 0.0);
        for (std::size_t i = 0; i <= d; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < d; ++j) centroid[j] += p[i][j] / static_cast<double>(d);
        auto along = [&](double t) {
            std::vector<double> x(d);
            for (std::size_t j = 0; j < d; ++j) x[j] = centroid[j] + t * (p[worst][j] - centroid[j]);
            return x;
        };
        auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                p[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                p[worst] = std::move(xr);
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            p[worst] = std::move(xr);
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            p[worst] = std::move(xc);
            fv[worst] = fc;
            continue;
        }
        if (evals + d > max_eval) break;
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < d; ++j) p[i][j] = p[best][j] + 0.5 * (p[i][j] - p[best][j]);
            fv[i] = eval(p[i]);
        }
    }
    const auto b = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    return {p[b], fv[b], converged};
}

} // namespace detail

/// Maximizes the objective over W-state phases. theta_0 is pinned to 0
/// because a common shift of all phases is a global phase.
inline OptimizeResult optimize_phases(const Scenario& s, const OptimizeTarget& target, const OptimizeOptions& opt = {},
                                      const KernelSet& kernels = default_kernels()) {
    validate(s);
    const std::size_t n = s.size();
    if (n == 0) throw ValidationError("emitters", "phase optimization needs at least one emitter");
    if (target.kind == Objective::capacity) s.require_receiver();
    if (opt.restarts < 4) throw std::domain_error("optimize_phases: at least 4 restarts");
    const ContinuumKernels k(kernels);

    std::vector<std::vector<double>> starts;
    for (const auto& st : opt.starts) {
        if (st.size() != n) throw std::domain_error("optimize_phases: start has the wrong length");
        starts.push_back(st);
    }
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    if (starts.size() < opt.restarts) starts.push_back(std::vector<double>(n, 0.0));
    while (starts.size() < opt.restarts) {
        std::vector<double> st(n);
        for (auto& v : st) v = u(rng);
        starts.push_back(std::move(st));
    }
    for (auto& st : starts) {
        const double shift = st[0];
        for (auto& v : st) v = wrap_phase(v - shift);
    }

    const std::size_t per_restart = std::max<std::size_t>(opt.budget / starts.size(), n + 2);
    std::vector<std::vector<TraceEntry>> traces(starts.size());
    std::vector<detail::NelderMeadResult> results(starts.size());
    parallel_for(starts.size(), opt.threads, [&](std::size_t r) {
        auto full = [&](const std::vector<double>& free) {
            std::vector<double> theta(n, 0.0);
            for (std::size_t j = 0; j + 1 < n; ++j) theta[j + 1] = wrap_phase(free[j]);
            return theta;
        };
        auto f = [&](const std::vector<double>& free) {
            const auto theta = full(free);
            const double v = phase_objective(s, target, theta, k);
            traces[r].push_back({r, traces[r].size(), theta, v});
            return -v;
        };
        std::vector<double> x0(starts[r].begin() + 1, starts[r].end());
        if (x0.empty()) {
            results[r] = {x0, f(x0), true};
            return;
        }
        results[r] = detail::nelder_mead(f, x0, opt.initial_step, per_restart, opt.ftol, opt.xtol);
        for (auto& v : results[r].x) v = wrap_phase(v);
    });

    OptimizeResult out;
    out.converged = true;
    std::size_t best = 0;
    for (std::size_t r = 0; r < results.size(); ++r) {
        out.restart_values.push_back(-results[r].f);
        out.converged = out.converged && results[r].converged;
        if (-results[r].f > -results[best].f) best = r;
        out.trace.insert(out.trace.end(), traces[r].begin(), traces[r].end());
    }
    out.evaluations = out.trace.size();
    out.value = -results[best].f;
    out.phases.assign(n, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) out.phases[j + 1] = results[best].x[j];
    return out;
}

} // namespace qshock
