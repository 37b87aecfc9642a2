#pragma once

// Plot-ready outputs. Numbers are written with 9 significant digits in
// scientific notation through std::to_chars, so files do not depend on the
// locale and identical runs give identical bytes.

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "mapper.hpp"

namespace qshock {

/// Output or input file problem that is not a schema error.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_number(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 8);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '+')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
        throw SchemaError(where + ": not a number: '" + std::string(s) + "'", 0);
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Sidecar path for a data file: same stem, .json extension.
inline std::filesystem::path sidecar_path(const std::filesystem::path& data) {
    auto p = data;
    p.replace_extension(".json");
    return p;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& data) {
    auto p = data;
    p.replace_extension(".manifest.json");
    return p;
}

// ---------------------------------------------------------------------------
// Grid maps: first row holds the x axis, first column the y axis.

inline std::string grid_csv(const GridMap& m) {
    m.check();
    std::string s = "y\\x";
    for (double x : m.x) s += "," + format_number(x);
    s += "\n";
    for (std::size_t j = 0; j < m.y.size(); ++j) {
        s += format_number(m.y[j]);
        for (std::size_t i = 0; i < m.x.size(); ++i) {
            s += ",";
            s += format_number(m(i, j));
        }
        s += "\n";
    }
    return s;
}

/// Parses grid_csv output. Quantity and fingerprint come from the sidecar
/// when one is given.
inline GridMap parse_grid_csv(std::string_view text, const std::string& name = "grid") {
    GridMap m;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_commas(line);
        const std::string where = name + ":" + std::to_string(line_no);
        if (m.x.empty()) {
            if (cells.size() < 3) throw SchemaError(where + ": header needs at least two x values", line_no);
            for (std::size_t i = 1; i < cells.size(); ++i) m.x.push_back(parse_number(cells[i], where));
            continue;
        }
        if (cells.size() != m.x.size() + 1)
            throw SchemaError(where + ": expected " + std::to_string(m.x.size() + 1) + " columns", line_no);
        m.y.push_back(parse_number(cells[0], where));
        for (std::size_t i = 1; i < cells.size(); ++i) m.values.push_back(parse_number(cells[i], where));
    }
    if (m.y.size() < 2) throw SchemaError(name + ": need at least two rows of data", 0);
    m.check();
    return m;
}

struct GridSidecar {
    Quantity quantity = Quantity::energy;
    std::string fingerprint;
};

inline nlohmann::json grid_sidecar(const GridMap& m, const MapOptions* opt, const MapReport* report,
                                   const Window* window) {
    nlohmann::json j;
    j["quantity"] = to_string(m.quantity);
    j["fingerprint"] = m.fingerprint;
    j["nx"] = m.x.size();
    j["ny"] = m.y.size();
    if (window) j["window"] = {{"x", {window->x_min, window->x_max}}, {"y", {window->y_min, window->y_max}}, {"z", window->z}};
    if (opt) {
        j["quadrature"] = {{"cell_tolerance", opt->cell_tolerance},
                           {"verify_tolerance", opt->verify_tolerance},
                           {"verify_fraction", opt->verify_fraction},
                           {"strategy", opt->strategy == QuadratureStrategy::split_tail ? "split_tail" : "regulator"}};
    }
    if (report) {
        j["wall_seconds"] = report->wall_seconds;
        j["verified_cells"] = report->verified;
        j["max_verify_change"] = report->max_verify_change;
        j["failed_cells"] = report->failed_cells;
    }
    return j;
}

inline GridSidecar read_grid_sidecar(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what(), 0);
    }
    GridSidecar s;
    try {
        s.quantity = parse_quantity(j.at("quantity").get<std::string>());
        s.fingerprint = j.value("fingerprint", "");
    } catch (const std::exception& e) {
        throw SchemaError(path.string() + ": " + e.what(), 0, "quantity");
    }
    return s;
}

/// Reads a grid and, when present, its sidecar.
inline GridMap read_grid(const std::filesystem::path& csv) {
    GridMap m = parse_grid_csv(read_text(csv), csv.string());
    const auto side = sidecar_path(csv);
    if (std::filesystem::exists(side)) {
        const auto s = read_grid_sidecar(side);
        m.quantity = s.quantity;
        m.fingerprint = s.fingerprint;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Sweeps and tables.

inline std::string sweep_csv(const SweepCurve& c) {
    std::string s = "lambda_B,capacity\n";
    for (std::size_t i = 0; i < c.parameters.size(); ++i)
        s += format_number(c.parameters[i]) + "," + format_number(c.capacities[i]) + "\n";
    return s;
}

inline std::string trace_csv(const std::vector<TraceEntry>& trace) {
    std::string s = "restart,evaluation,value";
    const std::size_t n = trace.empty() ? 0 : trace.front().phases.size();
    for (std::size_t i = 0; i < n; ++i) s += ",theta" + std::to_string(i + 1);
    s += "\n";
    for (const auto& t : trace) {
        s += std::to_string(t.restart) + "," + std::to_string(t.evaluation) + "," + format_number(t.value);
        for (double v : t.phases) s += "," + format_number(v);
        s += "\n";
    }
    return s;
}

inline nlohmann::json settings_json(const KernelSettings& k) {
    return {{"rel_tol", k.rel_tol},
            {"strategy", k.strategy == QuadratureStrategy::split_tail ? "split_tail" : "regulator"}};
}

// ---------------------------------------------------------------------------

/// Record of one command-line run.
struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::string scenario_fingerprint;
    std::vector<std::string> outputs;
    nlohmann::json quadrature = nlohmann::json::object();
    unsigned threads = 0;
    double wall_seconds = 0.0;

    /// Every output with the FNV-1a digest of its bytes.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        j["config"] = config_path;
        j["scenario_fingerprint"] = scenario_fingerprint;
        j["quadrature"] = quadrature;
        j["threads"] = threads;
        j["wall_seconds"] = wall_seconds;
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : outputs) {
            std::string digest;
            if (std::filesystem::exists(o)) digest = fnv1a_hex(read_text(o));
            outs.push_back({{"path", o}, {"fnv1a", digest}});
        }
        j["outputs"] = outs;
        return j;
    }

    void write(const std::filesystem::path& path) const { write_text(path, to_json().dump(2) + "\n"); }
};

} // namespace qshock
