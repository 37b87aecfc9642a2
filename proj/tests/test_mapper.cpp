#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qshock/io.hpp"
#include "qshock/mapper.hpp"

using namespace qshock;

namespace {

constexpr double pi = std::numbers::pi;

Detector det(Vec3 x, double t, double lambda) {
    Detector d;
    d.position = x;
    d.coupling_time = t;
    d.coupling_strength = lambda;
    return d;
}

Scenario three_emitters(EmitterState state) {
    Scenario s;
    s.emitters = {det({-1.0, 0, 0}, 0.0, 1.0), det({0.0, 0, 0}, 0.4, 1.0), det({1.0, 0, 0}, 0.8, 1.0)};
    s.emitter_state = std::move(state);
    s.evaluation_time = 3.0;
    return s;
}

Scenario with_receiver(EmitterState state) {
    auto s = three_emitters(std::move(state));
    s.receiver = det({0, 2.5, 0}, 3.0, 2.0);
    s.evaluation_time = 3.5;
    return s;
}

Window small_window() {
    Window w;
    w.x_min = -4.0;
    w.x_max = 4.0;
    w.y_min = -4.0;
    w.y_max = 4.0;
    w.nx = 33;
    w.ny = 29;
    return w;
}

} // namespace

TEST(Window, AxesAndValidation) {
    Window w = small_window();
    EXPECT_EQ(w.xs().front(), -4.0);
    EXPECT_EQ(w.xs().back(), 4.0);
    EXPECT_EQ(w.ys().size(), 29u);
    w.nx = 1;
    EXPECT_THROW(w.validate(), ValidationError);
    w = small_window();
    w.x_max = w.x_min;
    EXPECT_THROW(w.validate(), ValidationError);
}

TEST(EnergyMap, EmptyScenarioIsZero) {
    Scenario s;
    s.evaluation_time = 2.0;
    const auto m = energy_map(s, small_window());
    for (double v : m.values) EXPECT_EQ(v, 0.0);
}

TEST(EnergyMap, OutsideLightConesIsZero) {
    auto s = three_emitters(w_state(3));
    Window w = small_window();
    w.x_min = 20.0;
    w.x_max = 30.0;
    const auto m = energy_map(s, w);
    for (double v : m.values) EXPECT_LT(std::abs(v), 1e-20);
}

TEST(EnergyMap, CellsMatchPointEvaluation) {
    const auto s = three_emitters(w_state(3, std::vector<double>{0.0, 0.5, 1.0}));
    MapReport report;
    const Window w = small_window();
    const auto m = energy_map(s, w, {}, &report);
    EXPECT_EQ(report.cells, w.nx * w.ny);
    EXPECT_EQ(report.verified, static_cast<std::size_t>(std::ceil(0.01 * w.nx * w.ny)));
    EXPECT_TRUE(report.failed_cells.empty());
    EXPECT_LT(report.max_verify_change, 1e-5 * m.max());
    double peak = 0.0;
    for (double v : m.values) peak = std::max(peak, std::abs(v));
    for (std::size_t j = 0; j < m.y.size(); j += 4) {
        for (std::size_t i = 0; i < m.x.size(); i += 3) {
            const double want = energy_density(s, {m.x[i], m.y[j], 0.0}, s.evaluation_time);
            EXPECT_NEAR(m(i, j), want, 1e-5 * peak) << i << "," << j;
        }
    }
}

TEST(EnergyMap, ThreadCountDoesNotChangeBits) {
    const auto s = three_emitters(w_state(3));
    MapOptions one, many;
    one.threads = 1;
    many.threads = 8;
    const auto a = energy_map(s, small_window(), one);
    const auto b = energy_map(s, small_window(), many);
    const auto c = energy_map(s, small_window(), many);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(b.values, c.values);
    EXPECT_EQ(grid_csv(a), grid_csv(c));
}

TEST(EnergyMap, GlobalPhaseInvariance) {
    const std::vector<double> th = {0.2, 1.7, -0.6}, shifted = {1.3, 2.8, 0.5};
    const auto a = energy_map(three_emitters(w_state(3, th)), small_window());
    const auto b = energy_map(three_emitters(w_state(3, shifted)), small_window());
    for (std::size_t c = 0; c < a.values.size(); ++c) EXPECT_NEAR(a.values[c], b.values[c], 1e-12);
}

TEST(CapacityMap, GlobalPhaseInvariance) {
    const std::vector<double> th = {0.0, pi, 0.4}, shifted = {2.0, pi + 2.0, 2.4};
    Window w = small_window();
    w.nx = 12;
    w.ny = 12;
    const auto a = capacity_map(with_receiver(w_state(3, th)), w);
    const auto b = capacity_map(with_receiver(w_state(3, shifted)), w);
    for (std::size_t c = 0; c < a.values.size(); ++c) EXPECT_NEAR(a.values[c], b.values[c], 1e-12);
}

TEST(CapacityMap, SpacelikeReceiverEverywhereGivesZero) {
    auto s = with_receiver(w_state(3));
    s.receiver->coupling_time = 0.9;
    s.evaluation_time = 1.0;
    Window w;
    w.x_min = 10.0;
    w.x_max = 14.0;
    w.y_min = 10.0;
    w.y_max = 14.0;
    w.nx = w.ny = 8;
    const auto m = capacity_map(s, w);
    for (double v : m.values) EXPECT_LT(v, 1e-12);
}

TEST(CapacityMap, CellsMatchPointEvaluation) {
    const auto s = with_receiver(w_state(3));
    Window w = small_window();
    w.nx = 9;
    w.ny = 7;
    const auto m = capacity_map(s, w);
    for (std::size_t j = 0; j < m.y.size(); ++j) {
        for (std::size_t i = 0; i < m.x.size(); ++i) {
            auto local = s;
            local.receiver->position = {m.x[i], m.y[j], 0.0};
            EXPECT_NEAR(m(i, j), channel_capacity(channel_point(local)), 1e-7);
        }
    }
}

TEST(CapacityMap, NeedsReceiver) {
    EXPECT_THROW(capacity_map(three_emitters(w_state(3)), small_window()), ValidationError);
}

TEST(MapFailures, AbortAboveThreshold) {
    const auto s = three_emitters(w_state(3));
    Window w = small_window();
    auto failing = [](double limit) {
        return [limit](const ContinuumKernels&) {
            return [limit](double x, double) -> double {
                if (x < limit) throw NumericalError("forced");
                return 1.0;
            };
        };
    };
    // One column of 33 fails: 29 of 957 cells, well above 0.1%.
    EXPECT_THROW(detail::evaluate_map(s, w, Quantity::energy, {}, nullptr, failing(-3.9)), NumericalError);
    // No failure at all.
    MapReport report;
    const auto ok = detail::evaluate_map(s, w, Quantity::energy, {}, &report, failing(-10.0));
    EXPECT_TRUE(report.failed_cells.empty());
    EXPECT_EQ(ok.values.front(), 1.0);
    // A single failing cell is tolerated and reported.
    MapOptions lenient;
    lenient.max_failed_fraction = 0.05;
    const auto partial = detail::evaluate_map(s, w, Quantity::energy, lenient, &report, failing(-3.9));
    EXPECT_EQ(report.failed_cells.size(), w.ny);
    EXPECT_EQ(partial(0, 0), 0.0);
}

TEST(DiffMap, SelfDifferenceIsZero) {
    const auto m = energy_map(three_emitters(w_state(3)), small_window());
    const auto d = diff_map(m, m);
    EXPECT_EQ(d.quantity, Quantity::delta);
    for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(DiffMap, RejectsMismatches) {
    const auto a = energy_map(three_emitters(w_state(3)), small_window());
    Window w = small_window();
    w.nx = 10;
    const auto b = energy_map(three_emitters(w_state(3)), w);
    EXPECT_THROW(diff_map(a, b), std::domain_error);
    auto c = a;
    c.quantity = Quantity::capacity;
    EXPECT_THROW(diff_map(a, c), std::domain_error);
}

TEST(DiffMap, EntanglementOnlyMattersWhereShellsOverlap) {
    const auto w_map = energy_map(three_emitters(w_state(3)), small_window());
    const auto c_map = energy_map(three_emitters(classical_mixture(3)), small_window());
    const auto d = diff_map(w_map, c_map);
    const auto s = three_emitters(w_state(3));
    bool some_nonzero = false;
    for (std::size_t j = 0; j < d.y.size(); ++j) {
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            int shells = 0;
            for (const auto& e : s.emitters) {
                const double r = (Vec3{d.x[i], d.y[j], 0.0} - e.position).norm();
                if (std::abs(r - (s.evaluation_time - e.coupling_time)) <= e.smearing_radius + 1e-9) ++shells;
            }
            if (shells < 2) {
                EXPECT_LT(std::abs(d(i, j)), 1e-8) << i << "," << j;
            }
            if (std::abs(d(i, j)) > 1e-6) some_nonzero = true;
        }
    }
    EXPECT_TRUE(some_nonzero);
}

TEST(Sweep, ArgmaxAndEndpoints) {
    const auto s = with_receiver(w_state(3));
    const auto lambdas = linspace(0.0, 6.0, 25);
    const auto c = coupling_sweep(s, lambdas);
    ASSERT_EQ(c.capacities.size(), lambdas.size());
    EXPECT_EQ(c.capacities.front(), 0.0);
    for (double v : c.capacities) EXPECT_LE(v, c.max);
    EXPECT_EQ(c.capacities[c.argmax], c.max);
    EXPECT_GT(c.max, 0.0);
}

TEST(Sweep, RejectsBadSamples) {
    const auto s = with_receiver(w_state(3));
    EXPECT_THROW(coupling_sweep(s, {1.0, 2.0}), std::domain_error);
    EXPECT_THROW(coupling_sweep(s, {1.0, -2.0, 3.0}), std::domain_error);
    EXPECT_THROW(coupling_sweep(three_emitters(w_state(3)), {1.0, 2.0, 3.0}), ValidationError);
}

TEST(Optimizer, SingleEmitterIsFlat) {
    Scenario s;
    s.emitters = {det({0, 0, 0}, 0.0, 1.0)};
    s.emitter_state = w_state(1);
    s.evaluation_time = 2.0;
    const OptimizeTarget target{Objective::energy, {1.8, 0.3, 0.0}};
    const auto r = optimize_phases(s, target);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.value, energy_density(s, target.point, 2.0));
    for (double th : {0.5, 2.0, 5.0}) {
        const std::vector<double> theta = {th};
        EXPECT_NEAR(phase_objective(s, target, theta), r.value, 1e-15);
    }
}

TEST(Optimizer, TwoEmitterEnergyMatchesBruteForceScan) {
    Scenario s;
    s.emitters = {det({-1.5, 0, 0}, 0.0, 1.0), det({1.5, 0, 0}, 0.3, 1.0)};
    s.emitter_state = w_state(2);
    s.evaluation_time = 2.5;
    const OptimizeTarget target{Objective::energy, {0.0, std::sqrt(2.3 * 2.3 - 1.5 * 1.5), 0.0}};
    double best = -1.0, best_theta = 0.0;
    for (int k = 0; k < 3600; ++k) {
        const double th = 2 * pi * k / 3600.0;
        const double v = phase_objective(s, target, {0.0, th});
        if (v > best) {
            best = v;
            best_theta = th;
        }
    }
    const auto r = optimize_phases(s, target);
    EXPECT_TRUE(r.converged);
    EXPECT_GE(r.value, best - 1e-12);
    double gap = std::abs(r.phases[1] - best_theta);
    gap = std::min(gap, 2 * pi - gap);
    EXPECT_LT(gap, 2e-3);
    // The optimum either matches or opposes the monopole phase difference.
    double phase_gap = std::abs(wrap_phase(r.phases[1] - 2.0 * 0.3));
    phase_gap = std::min({phase_gap, std::abs(phase_gap - pi), 2 * pi - phase_gap});
    EXPECT_LT(phase_gap, 1e-3);
    EXPECT_EQ(r.phases[0], 0.0);
}

TEST(Optimizer, DeterministicAndTraced) {
    const auto s = with_receiver(w_state(3));
    const OptimizeTarget target{Objective::capacity, {0.3, 2.4, 0.0}};
    OptimizeOptions opt;
    opt.budget = 600;
    const auto a = optimize_phases(s, target, opt);
    opt.threads = 1;
    const auto b = optimize_phases(s, target, opt);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.phases, b.phases);
    EXPECT_EQ(a.trace.size(), a.evaluations);
    EXPECT_EQ(a.restart_values.size(), 4u);
    double best_in_trace = 0.0;
    for (const auto& t : a.trace) best_in_trace = std::max(best_in_trace, t.value);
    EXPECT_EQ(best_in_trace, a.value);
    EXPECT_GE(a.value, phase_objective(s, target, {0.0, 0.0, 0.0}));
}

TEST(Optimizer, ExhaustedBudgetIsFlagged) {
    const auto s = with_receiver(w_state(3));
    OptimizeOptions opt;
    opt.budget = 24;
    const auto r = optimize_phases(s, {Objective::capacity, {0.3, 2.4, 0.0}}, opt);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evaluations, 24u);
    EXPECT_GE(r.value, phase_objective(s, {Objective::capacity, {0.3, 2.4, 0.0}}, {0.0, 0.0, 0.0}));
}

TEST(Optimizer, NeedsFourRestarts) {
    OptimizeOptions opt;
    opt.restarts = 3;
    EXPECT_THROW(optimize_phases(with_receiver(w_state(3)), {Objective::capacity, {0, 2, 0}}, opt), std::domain_error);
}

TEST(Optimizer, BeatsThePiPatternAtItsPeakCell) {
    const Scenario s = load_scenario_file(std::string(QSHOCK_SOURCE_DIR) + "/scenarios/fig2b.cfg");
    Window w;
    w.nx = 33;
    w.ny = 33;
    const GridMap m = capacity_map(s, w);
    const std::size_t k = m.argmax();
    const Vec3 peak{m.x[k % w.nx], m.y[k / w.nx], 0.0};
    ASSERT_GT(m.max(), 0.0);

    const std::vector<double> pattern{0.0, 0.0, pi, pi};
    const ContinuumKernels kernels(default_kernels());
    const double reference = phase_objective(s, {Objective::capacity, peak}, pattern, kernels);
    EXPECT_NEAR(reference, m.max(), 1e-6 * m.max());
    const auto r = optimize_phases(s, {Objective::capacity, peak});
    EXPECT_GE(r.value, reference);
}

TEST(Csv, NumberFormat) {
    EXPECT_EQ(format_number(1.0), "1.00000000e+00");
    EXPECT_EQ(format_number(-0.000123456789), "-1.23456789e-04");
    EXPECT_EQ(format_number(0.0), "0.00000000e+00");
}

TEST(Csv, GridRoundTrip) {
    const auto m = energy_map(three_emitters(w_state(3)), small_window());
    const auto text = grid_csv(m);
    EXPECT_EQ(text.rfind("y\\x,", 0), 0u);
    const auto back = parse_grid_csv(text);
    ASSERT_EQ(back.values.size(), m.values.size());
    for (std::size_t c = 0; c < m.values.size(); ++c)
        EXPECT_NEAR(back.values[c], m.values[c], 5e-9 * std::abs(m.values[c]) + 1e-300);
    EXPECT_EQ(grid_csv(back), text);
}

TEST(Csv, RejectsRaggedRows) {
    EXPECT_THROW(parse_grid_csv("y\\x,0,1\n0,1,2\n1,3\n"), SchemaError);
    EXPECT_THROW(parse_grid_csv("y\\x,0,1\n0,1,abc\n1,3,4\n"), SchemaError);
}
