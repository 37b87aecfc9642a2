#pragma once

// Command-line front end. Exit codes:
//   0   success
//   1   invalid input (schema, validation, unreadable or unwritable files)
//   2   numerical failure (tolerance not reached, Hilbert-space budget, oracle mismatch)
//   64  usage error (unknown flag, missing required option)

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "mapper.hpp"
#include "observables.hpp"
#include "oracle.hpp"

namespace qshock::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUsage = 64;

namespace detail {

struct WindowArgs {
    Window window;
    std::optional<double> z;

    void add(CLI::App* app) {
        app->add_option("--x-min", window.x_min, "Window lower x")->capture_default_str();
        app->add_option("--x-max", window.x_max, "Window upper x")->capture_default_str();
        app->add_option("--y-min", window.y_min, "Window lower y")->capture_default_str();
        app->add_option("--y-max", window.y_max, "Window upper y")->capture_default_str();
        app->add_option("--nx", window.nx, "Samples along x (>= 2)")->capture_default_str();
        app->add_option("--ny", window.ny, "Samples along y (>= 2)")->capture_default_str();
        app->add_option("--z", z, "Plane height (default 0, or the receiver's z for capacity maps)");
    }
};

struct MapArgs {
    std::string config, out, manifest, strategy = "split_tail";
    WindowArgs window;
    std::optional<double> time;
    MapOptions options;

    void add(CLI::App* app, bool with_time) {
        app->add_option("--config", config, "Scenario file")->required();
        app->add_option("--out", out, "Output CSV (a .json sidecar is written next to it)")->required();
        app->add_option("--manifest", manifest, "Run manifest path (default <out stem>.manifest.json)");
        window.add(app);
        if (with_time) app->add_option("--time", time, "Evaluation time (default: the scenario's evaluation_time)");
        app->add_option("--cell-tol", options.cell_tolerance, "Kernel tolerance for the main pass")
            ->capture_default_str();
        app->add_option("--verify-tol", options.verify_tolerance, "Kernel tolerance for re-verified cells")
            ->capture_default_str();
        app->add_option("--verify-fraction", options.verify_fraction, "Fraction of extreme cells re-verified")
            ->capture_default_str();
        app->add_option("--strategy", strategy, "Kernel quadrature: split_tail or regulator")
            ->check(CLI::IsMember({"split_tail", "regulator"}))
            ->capture_default_str();
    }
};

inline QuadratureStrategy parse_strategy(const std::string& s) {
    return s == "regulator" ? QuadratureStrategy::regulator : QuadratureStrategy::split_tail;
}

inline KernelKind parse_kind(const std::string& s) {
    if (s == "vacuum") return KernelKind::vacuum_variance;
    if (s == "commutator") return KernelKind::commutator;
    if (s == "radiation-time") return KernelKind::radiation_time;
    return KernelKind::radiation_radial;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline nlohmann::json map_quadrature(const MapOptions& o) {
    return {{"cell_tolerance", o.cell_tolerance},
            {"verify_tolerance", o.verify_tolerance},
            {"verify_fraction", o.verify_fraction},
            {"strategy", o.strategy == QuadratureStrategy::split_tail ? "split_tail" : "regulator"}};
}

inline void write_manifest(RunManifest m, const std::string& explicit_path, const std::string& first_output,
                           std::chrono::steady_clock::time_point t0) {
    m.wall_seconds = seconds_since(t0);
    if (!explicit_path.empty()) {
        m.write(explicit_path);
    } else if (!first_output.empty()) {
        m.write(manifest_path(first_output));
    }
}

} // namespace detail

/// Runs one command line. Normal output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace detail;
    const auto t0 = std::chrono::steady_clock::now();

    CLI::App app{"qshock: energy density and channel capacity of delta-coupled emitters"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    app.footer("Environment: QSHOCK_KERNEL_TOL overrides the default kernel tolerance (1e-8).\n"
               "Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 64 usage error.");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
    std::string validate_config, validate_manifest;
    validate_cmd->add_option("--config", validate_config, "Scenario file")->required();
    validate_cmd->add_option("--manifest", validate_manifest, "Optional run manifest path");

    // maps
    auto* energy_cmd = app.add_subcommand("energy-map", "Energy density over a planar window");
    MapArgs energy_args;
    energy_args.add(energy_cmd, true);
    auto* capacity_cmd = app.add_subcommand("capacity-map", "Channel capacity with the receiver scanned over a window");
    MapArgs capacity_args;
    capacity_args.add(capacity_cmd, false);

    // diff
    auto* diff_cmd = app.add_subcommand("diff", "Cellwise difference a - b of two maps");
    std::string diff_a, diff_b, diff_out, diff_manifest;
    diff_cmd->add_option("--a", diff_a, "Minuend CSV")->required();
    diff_cmd->add_option("--b", diff_b, "Subtrahend CSV")->required();
    diff_cmd->add_option("--out", diff_out, "Output CSV")->required();
    diff_cmd->add_option("--manifest", diff_manifest, "Run manifest path");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Capacity versus the receiver coupling strength");
    std::string sweep_config, sweep_out, sweep_manifest;
    double lambda_min = 0.0, lambda_max = 8.0;
    std::size_t samples = 100;
    std::optional<double> lambda_a;
    sweep_cmd->add_option("--config", sweep_config, "Scenario file")->required();
    sweep_cmd->add_option("--out", sweep_out, "Output CSV")->required();
    sweep_cmd->add_option("--manifest", sweep_manifest, "Run manifest path");
    sweep_cmd->add_option("--lambda-min", lambda_min, "Smallest lambda_B")->capture_default_str();
    sweep_cmd->add_option("--lambda-max", lambda_max, "Largest lambda_B")->capture_default_str();
    sweep_cmd->add_option("--samples", samples, "Number of samples (> 2)")->capture_default_str();
    sweep_cmd->add_option("--lambda-a", lambda_a, "Override every emitter's coupling strength");

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "Search W-state phases that maximize an objective");
    std::string opt_config, opt_out, opt_manifest, objective = "capacity";
    std::vector<double> point;
    OptimizeOptions opt_options;
    opt_cmd->add_option("--config", opt_config, "Scenario file")->required();
    opt_cmd->add_option("--out", opt_out, "Evaluation trace CSV (result in the .json sidecar)")->required();
    opt_cmd->add_option("--manifest", opt_manifest, "Run manifest path");
    opt_cmd->add_option("--objective", objective, "energy or capacity")
        ->check(CLI::IsMember({"energy", "capacity"}))
        ->capture_default_str();
    opt_cmd->add_option("--point", point, "x y z: field point (energy) or receiver position (capacity)")
        ->expected(3)
        ->required();
    opt_cmd->add_option("--restarts", opt_options.restarts, "Starting points (>= 4)")->capture_default_str();
    opt_cmd->add_option("--budget", opt_options.budget, "Total objective evaluations")->capture_default_str();
    opt_cmd->add_option("--seed", opt_options.seed, "Seed for random starting points")->capture_default_str();

    // kernels
    auto* kern_cmd = app.add_subcommand("kernels", "Tabulate a kernel integral for debugging");
    std::string kind = "commutator", kern_out, kern_manifest, kern_strategy = "split_tail";
    double r_min = 0.0, r_max = 10.0, dt_min = 0.0, dt_max = 10.0, radius = kDefaultRadius;
    std::size_t nr = 101, ndt = 1;
    std::optional<double> kern_tol;
    kern_cmd->add_option("--kind", kind, "vacuum, commutator, radiation-time or radiation-radial")
        ->check(CLI::IsMember({"vacuum", "commutator", "radiation-time", "radiation-radial"}))
        ->capture_default_str();
    kern_cmd->add_option("--out", kern_out, "Output CSV (r, dt, value, err_estimate)")->required();
    kern_cmd->add_option("--manifest", kern_manifest, "Run manifest path");
    kern_cmd->add_option("--r-min", r_min, "Smallest separation")->capture_default_str();
    kern_cmd->add_option("--r-max", r_max, "Largest separation")->capture_default_str();
    kern_cmd->add_option("--nr", nr, "Separation samples")->capture_default_str();
    kern_cmd->add_option("--dt-min", dt_min, "Smallest time difference")->capture_default_str();
    kern_cmd->add_option("--dt-max", dt_max, "Largest time difference")->capture_default_str();
    kern_cmd->add_option("--ndt", ndt, "Time-difference samples")->capture_default_str();
    kern_cmd->add_option("--radius", radius, "Smearing radius")->capture_default_str();
    kern_cmd->add_option("--tol", kern_tol, "Relative tolerance (default: environment or 1e-8)");
    kern_cmd->add_option("--strategy", kern_strategy, "split_tail or regulator")
        ->check(CLI::IsMember({"split_tail", "regulator"}))
        ->capture_default_str();

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "Compare the pipeline with exact evolution on discrete modes");
    double oracle_tol = 1e-6;
    std::string oracle_out, oracle_manifest;
    oracle_cmd->add_option("--tol", oracle_tol, "Allowed |pipeline - exact|")->capture_default_str();
    oracle_cmd->add_option("--out", oracle_out, "Optional CSV table");
    oracle_cmd->add_option("--manifest", oracle_manifest, "Run manifest path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n"
            << "run with --help for the list of options\n";
        return kExitUsage;
    }
    // Subcommand help is raised from within parse as well; nothing else to do here.

    try {
        RunManifest manifest;
        manifest.threads = threads;

        if (*validate_cmd) {
            const auto s = load_scenario_file(validate_config);
            out << "ok: " << s.size() << " emitter(s), receiver " << (s.receiver ? "present" : "absent")
                << ", fingerprint " << fingerprint(s) << "\n";
            manifest.subcommand = "validate";
            manifest.config_path = validate_config;
            manifest.scenario_fingerprint = fingerprint(s);
            write_manifest(manifest, validate_manifest, "", t0);
            return kExitOk;
        }

        if (energy_cmd->parsed() || capacity_cmd->parsed()) {
            const bool energy = energy_cmd->parsed();
            MapArgs& a = energy ? energy_args : capacity_args;
            Scenario s = load_scenario_file(a.config);
            if (a.time) s.evaluation_time = *a.time;
            Window w = a.window.window;
            w.z = a.window.z.value_or(!energy && s.receiver ? s.receiver->position.z : 0.0);
            a.options.threads = threads;
            a.options.strategy = parse_strategy(a.strategy);
            MapReport report;
            const GridMap m = energy ? energy_map(s, w, a.options, &report) : capacity_map(s, w, a.options, &report);
            write_text(a.out, grid_csv(m));
            const auto side = sidecar_path(a.out);
            write_text(side, grid_sidecar(m, &a.options, &report, &w).dump(2) + "\n");
            out << to_string(m.quantity) << " map " << w.nx << "x" << w.ny << " written to " << a.out
                << " (max " << format_number(m.max()) << ", min " << format_number(m.min()) << ", "
                << report.failed_cells.size() << " failed cells)\n";
            manifest.subcommand = energy ? "energy-map" : "capacity-map";
            manifest.config_path = a.config;
            manifest.scenario_fingerprint = m.fingerprint;
            manifest.outputs = {a.out, side.string()};
            manifest.quadrature = map_quadrature(a.options);
            write_manifest(manifest, a.manifest, a.out, t0);
            return kExitOk;
        }

        if (*diff_cmd) {
            const GridMap a = read_grid(diff_a), b = read_grid(diff_b);
            const GridMap d = diff_map(a, b);
            write_text(diff_out, grid_csv(d));
            const auto side = sidecar_path(diff_out);
            auto j = grid_sidecar(d, nullptr, nullptr, nullptr);
            j["a"] = diff_a;
            j["b"] = diff_b;
            write_text(side, j.dump(2) + "\n");
            out << "difference written to " << diff_out << " (max " << format_number(d.max()) << ", min "
                << format_number(d.min()) << ")\n";
            manifest.subcommand = "diff";
            manifest.scenario_fingerprint = d.fingerprint;
            manifest.outputs = {diff_out, side.string()};
            write_manifest(manifest, diff_manifest, diff_out, t0);
            return kExitOk;
        }

        if (*sweep_cmd) {
            Scenario s = load_scenario_file(sweep_config);
            if (lambda_a)
                for (auto& e : s.emitters) e.coupling_strength = *lambda_a;
            validate(s);
            if (samples < 3) throw std::domain_error("--samples must be > 2");
            const auto c = coupling_sweep(s, linspace(lambda_min, lambda_max, samples), threads);
            write_text(sweep_out, sweep_csv(c));
            const auto side = sidecar_path(sweep_out);
            nlohmann::json j = {{"quantity", "capacity"},
                                {"parameter", "lambda_B"},
                                {"fingerprint", fingerprint(s)},
                                {"argmax_index", c.argmax},
                                {"argmax_lambda_B", c.parameters[c.argmax]},
                                {"max_capacity", c.max},
                                {"quadrature", settings_json(default_kernels().settings())},
                                {"wall_seconds", seconds_since(t0)}};
            write_text(side, j.dump(2) + "\n");
            out << "capacity peaks at lambda_B = " << format_number(c.parameters[c.argmax]) << " with "
                << format_number(c.max) << " bits\n";
            manifest.subcommand = "sweep";
            manifest.config_path = sweep_config;
            manifest.scenario_fingerprint = fingerprint(s);
            manifest.outputs = {sweep_out, side.string()};
            manifest.quadrature = settings_json(default_kernels().settings());
            write_manifest(manifest, sweep_manifest, sweep_out, t0);
            return kExitOk;
        }

        if (*opt_cmd) {
            const Scenario s = load_scenario_file(opt_config);
            opt_options.threads = threads;
            const OptimizeTarget target{objective == "energy" ? Objective::energy : Objective::capacity,
                                        {point[0], point[1], point[2]}};
            const auto r = optimize_phases(s, target, opt_options);
            write_text(opt_out, trace_csv(r.trace));
            const auto side = sidecar_path(opt_out);
            nlohmann::json j = {{"objective", objective},
                                {"point", point},
                                {"fingerprint", fingerprint(s)},
                                {"best_phases", r.phases},
                                {"best_value", r.value},
                                {"converged", r.converged},
                                {"evaluations", r.evaluations},
                                {"restart_values", r.restart_values},
                                {"seed", opt_options.seed},
                                {"quadrature", settings_json(default_kernels().settings())},
                                {"wall_seconds", seconds_since(t0)}};
            write_text(side, j.dump(2) + "\n");
            out << "best " << objective << " " << format_number(r.value) << " at theta =";
            for (double v : r.phases) out << " " << format_number(v);
            out << (r.converged ? "" : "  (budget exhausted: best so far, not converged)") << "\n";
            manifest.subcommand = "optimize";
            manifest.config_path = opt_config;
            manifest.scenario_fingerprint = fingerprint(s);
            manifest.outputs = {opt_out, side.string()};
            manifest.quadrature = settings_json(default_kernels().settings());
            write_manifest(manifest, opt_manifest, opt_out, t0);
            return kExitOk;
        }

        if (*kern_cmd) {
            KernelSettings ks = KernelSettings::from_environment();
            if (kern_tol) {
                if (!(*kern_tol > 0.0)) throw ValidationError("--tol", "must be > 0");
                ks.rel_tol = *kern_tol;
            }
            ks.strategy = parse_strategy(kern_strategy);
            ks.use_cache = false;
            const KernelSet set(ks);
            const KernelKind k = parse_kind(kind);
            if (nr < 1 || ndt < 1) throw std::domain_error("--nr and --ndt must be >= 1");
            auto axis = [](double lo, double hi, std::size_t n) {
                return n == 1 ? std::vector<double>{lo} : linspace(lo, hi, n);
            };
            const auto rs = k == KernelKind::vacuum_variance ? std::vector<double>{0.0} : axis(r_min, r_max, nr);
            const auto dts = k == KernelKind::vacuum_variance ? std::vector<double>{0.0} : axis(dt_min, dt_max, ndt);
            std::vector<KernelValue> vals(rs.size() * dts.size());
            parallel_for(vals.size(), threads, [&](std::size_t c) {
                const double r = rs[c / dts.size()], dt = dts[c % dts.size()];
                switch (k) {
                case KernelKind::vacuum_variance: vals[c] = set.vacuum_variance(radius); break;
                case KernelKind::commutator: vals[c] = set.commutator(r, dt, radius, radius); break;
                default: vals[c] = set.radiation(r, dt, radius, k); break;
                }
            });
            std::string csv = "r,dt,value,err_estimate\n";
            for (std::size_t c = 0; c < vals.size(); ++c)
                csv += format_number(rs[c / dts.size()]) + "," + format_number(dts[c % dts.size()]) + "," +
                       format_number(vals[c].value) + "," + format_number(vals[c].error) + "\n";
            write_text(kern_out, csv);
            out << vals.size() << " " << kind << " values written to " << kern_out << "\n";
            manifest.subcommand = "kernels";
            manifest.outputs = {kern_out};
            manifest.quadrature = settings_json(ks);
            write_manifest(manifest, kern_manifest, kern_out, t0);
            return kExitOk;
        }

        if (*oracle_cmd) {
            if (!(oracle_tol > 0.0)) throw ValidationError("--tol", "must be > 0");
            const auto cases = oracle::standard_cases();
            std::vector<oracle::OracleOutcome> results(cases.size());
            parallel_for(cases.size(), threads, [&](std::size_t i) { results[i] = oracle::run_case(cases[i], oracle_tol); });
            bool all = true;
            std::string csv = "case,pipeline,exact,abs_diff,tolerance,cutoff,cutoff_change,passed\n";
            out << std::left << std::setw(42) << "case" << std::setw(17) << "pipeline" << std::setw(17) << "exact"
                << std::setw(17) << "|diff|" << std::setw(17) << "tolerance" << "status\n";
            for (const auto& r : results) {
                all = all && r.passed();
                out << std::setw(42) << r.name << std::setw(17) << format_number(r.pipeline) << std::setw(17)
                    << format_number(r.exact) << std::setw(17) << format_number(r.difference()) << std::setw(17)
                    << format_number(r.tolerance) << (r.passed() ? "pass" : (r.converged ? "FAIL" : "FAIL (cutoff)"))
                    << "\n";
                csv += "\"" + r.name + "\"," + format_number(r.pipeline) + "," + format_number(r.exact) + "," +
                       format_number(r.difference()) + "," + format_number(r.tolerance) + "," +
                       std::to_string(r.cutoff) + "," + format_number(r.cutoff_change) + "," +
                       (r.passed() ? "1" : "0") + "\n";
            }
            manifest.subcommand = "oracle";
            if (!oracle_out.empty()) {
                write_text(oracle_out, csv);
                manifest.outputs = {oracle_out};
            }
            write_manifest(manifest, oracle_manifest, oracle_out, t0);
            if (!all) {
                err << "oracle: at least one case disagrees with the pipeline\n";
                return kExitNumerical;
            }
            return kExitOk;
        }
    } catch (const SchemaError& e) {
        err << "invalid input: " << e.what();
        if (e.line()) err << " (line " << e.line() << ")";
        err << "\n";
        return kExitInvalid;
    } catch (const ValidationError& e) {
        err << "invalid scenario: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << " (achieved error " << format_number(e.achieved_error())
            << ")\n";
        return kExitNumerical;
    } catch (const BudgetError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitUsage;
}

} // namespace qshock::cli
