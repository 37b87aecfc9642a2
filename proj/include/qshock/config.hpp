#pragma once

// Scenario configuration files: JSON text (comments allowed). The schema is
// shipped in schema/scenario.schema.json.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "scenario.hpp"

namespace qshock {

namespace detail {

using nlohmann::json;

inline std::size_t line_of_byte(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& field) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw SchemaError(field + ": unknown key '" + key + "'", 0, field + "." + key);
}

inline double number_at(const json& obj, const char* key, const std::string& field,
                        std::optional<double> fallback = std::nullopt) {
    const std::string f = field + "." + key;
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw SchemaError(f + ": required", 0, f);
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(f + ": expected a number", 0, f);
    return v.get<double>();
}

inline Detector parse_detector(const json& obj, const std::string& field) {
    if (!obj.is_object()) throw SchemaError(field + ": expected an object", 0, field);
    reject_unknown_keys(obj, {"position", "time", "lambda", "gap", "radius"}, field);
    Detector d;
    if (!obj.contains("position")) throw SchemaError(field + ".position: required", 0, field + ".position");
    const auto& pos = obj.at("position");
    if (!pos.is_array() || pos.size() != 3 ||
        !std::all_of(pos.begin(), pos.end(), [](const json& v) { return v.is_number(); }))
        throw SchemaError(field + ".position: expected [x, y, z]", 0, field + ".position");
    d.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
    d.coupling_time = number_at(obj, "time", field);
    d.coupling_strength = number_at(obj, "lambda", field);
    d.gap = number_at(obj, "gap", field, kDefaultGap);
    d.smearing_radius = number_at(obj, "radius", field, kDefaultRadius);
    validate(d, field);
    return d;
}

inline std::vector<double> number_list(const json& v, const std::string& field) {
    if (!v.is_array()) throw SchemaError(field + ": expected an array", 0, field);
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw SchemaError(field + ": expected numbers", 0, field);
        out.push_back(e.get<double>());
    }
    return out;
}

inline EmitterState parse_state(const json& obj, std::size_t n) {
    if (!obj.is_object()) throw SchemaError("state: expected an object", 0, "state");
    reject_unknown_keys(obj, {"type", "phases", "amplitudes"}, "state");
    if (!obj.contains("type") || !obj.at("type").is_string())
        throw SchemaError("state.type: required string", 0, "state.type");
    const auto type = obj.at("type").get<std::string>();
    if (type == "w") {
        if (n == 0) throw ValidationError("state.type", "'w' needs at least one emitter");
        std::vector<double> phases(n, 0.0);
        if (obj.contains("phases")) phases = number_list(obj.at("phases"), "state.phases");
        if (phases.size() != n)
            throw ValidationError("state.phases", "expected " + std::to_string(n) + " phases");
        return w_state(n, phases);
    }
    if (type == "classical") {
        if (n == 0) throw ValidationError("state.type", "'classical' needs at least one emitter");
        return classical_mixture(n);
    }
    if (type == "pure") {
        if (!obj.contains("amplitudes"))
            throw SchemaError("state.amplitudes: required for type 'pure'", 0, "state.amplitudes");
        const auto& arr = obj.at("amplitudes");
        if (!arr.is_array()) throw SchemaError("state.amplitudes: expected an array", 0, "state.amplitudes");
        std::vector<cplx> amps;
        for (const auto& a : arr) {
            if (a.is_number()) {
                amps.emplace_back(a.get<double>(), 0.0);
            } else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
                amps.emplace_back(a[0].get<double>(), a[1].get<double>());
            } else {
                throw SchemaError("state.amplitudes: entries must be numbers or [re, im]", 0,
                                  "state.amplitudes");
            }
        }
        return EmitterState::pure(n, std::move(amps));
    }
    throw SchemaError("state.type: expected 'w', 'classical' or 'pure', got '" + type + "'", 0,
                      "state.type");
}

} // namespace detail

/// Parses and validates a scenario. Throws SchemaError for malformed text and
/// ValidationError for invariant violations.
inline Scenario load_scenario(std::string_view text) {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("parse error: ") + e.what(),
                          detail::line_of_byte(text, e.byte == 0 ? 0 : e.byte - 1));
    }
    if (!root.is_object()) throw SchemaError("top level must be an object", 1);
    detail::reject_unknown_keys(root, {"emitters", "receiver", "state", "evaluation_time"}, "config");

    Scenario s;
    if (root.contains("emitters")) {
        const auto& list = root.at("emitters");
        if (!list.is_array()) throw SchemaError("emitters: expected an array", 0, "emitters");
        for (std::size_t i = 0; i < list.size(); ++i)
            s.emitters.push_back(detail::parse_detector(list[i], "emitters[" + std::to_string(i) + "]"));
    }
    if (root.contains("receiver")) s.receiver = detail::parse_detector(root.at("receiver"), "receiver");
    if (!root.contains("evaluation_time"))
        throw SchemaError("evaluation_time: required", 0, "evaluation_time");
    if (!root.at("evaluation_time").is_number())
        throw SchemaError("evaluation_time: expected a number", 0, "evaluation_time");
    s.evaluation_time = root.at("evaluation_time").get<double>();

    const std::size_t n = s.emitters.size();
    if (root.contains("state")) {
        s.emitter_state = detail::parse_state(root.at("state"), n);
    } else if (n == 0) {
        s.emitter_state = EmitterState::empty();
    } else {
        throw SchemaError("state: required when emitters are present", 0, "state");
    }
    validate(s);
    return s;
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open config file '" + path + "'", 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

/// Canonical JSON form of a scenario. Mixed states are written component-wise.
inline nlohmann::json to_json(const Scenario& s) {
    using nlohmann::json;
    auto det = [](const Detector& d) {
        return json{{"position", {d.position.x, d.position.y, d.position.z}},
                    {"time", d.coupling_time},
                    {"lambda", d.coupling_strength},
                    {"gap", d.gap},
                    {"radius", d.smearing_radius}};
    };
    json j;
    j["emitters"] = json::array();
    for (const auto& e : s.emitters) j["emitters"].push_back(det(e));
    if (s.receiver) j["receiver"] = det(*s.receiver);
    j["evaluation_time"] = s.evaluation_time;
    json comps = json::array();
    for (const auto& c : s.emitter_state.components()) {
        json amps = json::array();
        for (const auto& a : c.amplitudes) amps.push_back({a.real(), a.imag()});
        comps.push_back({{"weight", c.weight}, {"amplitudes", amps}});
    }
    j["state_components"] = comps;
    return j;
}

/// FNV-1a 64-bit digest, hex encoded.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fingerprint(const Scenario& s) { return fnv1a_hex(to_json(s).dump()); }

} // namespace qshock
