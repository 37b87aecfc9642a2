#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "qshock/config.hpp"

using namespace qshock;

namespace {

const char* kTwoEmitters = R"({
  // comments are allowed
  "emitters": [
    {"position": [5, 0, 0], "time": 1, "lambda": 1},
    {"position": [6.5, 0, 0], "time": 2, "lambda": 0.5, "gap": 3, "radius": 0.25}
  ],
  "receiver": {"position": [4.5, 11, 0], "time": 8, "lambda": 2},
  "state": {"type": "w", "phases": [0, 3.141592653589793]},
  "evaluation_time": 8.5
})";

std::string scenario_path(const std::string& name) {
    return std::string(QSHOCK_SOURCE_DIR) + "/scenarios/" + name;
}

template <class Error>
std::string field_of(const std::string& text) {
    try {
        load_scenario(text);
    } catch (const Error& e) {
        return e.field();
    }
    return "<no error>";
}

} // namespace

TEST(Config, ParsesEmittersReceiverAndState) {
    const Scenario s = load_scenario(kTwoEmitters);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_DOUBLE_EQ(s.emitters[0].position.x, 5.0);
    EXPECT_DOUBLE_EQ(s.emitters[0].gap, 2.0);
    EXPECT_DOUBLE_EQ(s.emitters[0].smearing_radius, 0.5);
    EXPECT_DOUBLE_EQ(s.emitters[1].gap, 3.0);
    EXPECT_DOUBLE_EQ(s.emitters[1].smearing_radius, 0.25);
    EXPECT_DOUBLE_EQ(s.emitters[1].coupling_strength, 0.5);
    ASSERT_TRUE(s.receiver.has_value());
    EXPECT_DOUBLE_EQ(s.receiver->coupling_time, 8.0);
    EXPECT_DOUBLE_EQ(s.evaluation_time, 8.5);

    ASSERT_EQ(s.emitter_state.qubits(), 2u);
    ASSERT_FALSE(s.emitter_state.is_mixed());
    const auto& amps = s.emitter_state.components()[0].amplitudes;
    const double h = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(amps[0]), 0.0, 1e-15);
    EXPECT_NEAR(amps[excited_index(2, 0)].real(), h, 1e-15);
    EXPECT_NEAR(amps[excited_index(2, 1)].real(), -h, 1e-15);
}

TEST(Config, ClassicalAndPureStates) {
    const Scenario c = load_scenario(R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1},
        {"position": [2,0,0], "time": 0, "lambda": 1}], "state": {"type": "classical"}, "evaluation_time": 1})");
    EXPECT_TRUE(c.emitter_state.is_mixed());
    EXPECT_EQ(c.emitter_state.components().size(), 2u);

    const Scenario p = load_scenario(R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1}],
        "state": {"type": "pure", "amplitudes": [[0.6, 0], [0, 0.8]]}, "evaluation_time": 1})");
    EXPECT_DOUBLE_EQ(p.emitter_state.components()[0].amplitudes[1].imag(), 0.8);
}

TEST(Config, VacuumScenarioNeedsNoState) {
    const Scenario s = load_scenario(R"({"evaluation_time": 0})");
    EXPECT_EQ(s.size(), 0u);
    EXPECT_EQ(s.emitter_state.qubits(), 0u);
}

TEST(Config, SchemaErrorsNameTheField) {
    EXPECT_EQ(field_of<SchemaError>(R"({"emitters": 3, "evaluation_time": 1})"), "emitters");
    EXPECT_EQ(field_of<SchemaError>(R"({"emitters": [], "evaluation_time": 1, "colour": 2})"), "config.colour");
    EXPECT_EQ(field_of<SchemaError>(R"({"evaluation_time": "soon"})"), "evaluation_time");
    EXPECT_EQ(field_of<SchemaError>(R"({"emitters": []})"), "evaluation_time");
    EXPECT_EQ(field_of<SchemaError>(
                  R"({"emitters": [{"position": [0,0], "time": 0, "lambda": 1}], "state": {"type": "w"}, "evaluation_time": 1})"),
              "emitters[0].position");
    EXPECT_EQ(field_of<SchemaError>(
                  R"({"emitters": [{"position": [0,0,0], "lambda": 1}], "state": {"type": "w"}, "evaluation_time": 1})"),
              "emitters[0].time");
    EXPECT_EQ(field_of<SchemaError>(
                  R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1}], "evaluation_time": 1})"),
              "state");
    EXPECT_EQ(field_of<SchemaError>(
                  R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1}], "state": {"type": "ghz"}, "evaluation_time": 1})"),
              "state.type");
}

TEST(Config, SyntaxErrorsReportTheLine) {
    try {
        load_scenario("{\n  \"evaluation_time\": 1,\n  oops\n}");
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Config, InvariantViolations) {
    EXPECT_EQ(field_of<ValidationError>(
                  R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": -1}], "state": {"type": "w"}, "evaluation_time": 1})"),
              "emitters[0].lambda");
    EXPECT_EQ(field_of<ValidationError>(
                  R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1, "radius": 0}], "state": {"type": "w"}, "evaluation_time": 1})"),
              "emitters[0].radius");
    EXPECT_EQ(field_of<ValidationError>(
                  R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1}], "state": {"type": "w", "phases": [0, 1]}, "evaluation_time": 1})"),
              "state.phases");
    EXPECT_THROW(load_scenario(R"({"emitters": [{"position": [0,0,0], "time": 0, "lambda": 1}],
        "state": {"type": "pure", "amplitudes": [1, 1]}, "evaluation_time": 1})"),
                 ValidationError);
}

TEST(Config, MissingFileIsASchemaError) {
    EXPECT_THROW(load_scenario_file("/nonexistent/scenario.cfg"), SchemaError);
}

TEST(Fingerprint, StableUnderFormattingAndSensitiveToValues) {
    const Scenario a = load_scenario(kTwoEmitters);
    const Scenario b = load_scenario(
        R"({"emitters":[{"position":[5.0,0,0],"time":1,"lambda":1.0},{"position":[6.5,0,0],"time":2,"lambda":0.5,"gap":3,"radius":0.25}],)"
        R"("receiver":{"position":[4.5,11,0],"time":8,"lambda":2},"state":{"type":"w","phases":[0,3.141592653589793]},"evaluation_time":8.5})");
    EXPECT_EQ(fingerprint(a), fingerprint(b));

    Scenario c = a;
    c.emitters[1].coupling_time = 2.0 + 1e-12;
    EXPECT_NE(fingerprint(a), fingerprint(c));
    EXPECT_EQ(fingerprint(a).size(), 16u);
}

TEST(Fingerprint, Fnv1aReferenceVectors) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Config, CanonicalJsonRoundTrip) {
    const Scenario a = load_scenario(kTwoEmitters);
    const auto j = to_json(a);
    EXPECT_EQ(j.at("emitters").size(), 2u);
    EXPECT_DOUBLE_EQ(j.at("receiver").at("lambda").get<double>(), 2.0);
    EXPECT_EQ(j.at("state_components").size(), 1u);
}

TEST(BundledScenarios, AllLoad) {
    for (const char* name : {"fig1.cfg", "fig1_classical.cfg", "fig2a.cfg", "fig2b.cfg", "fig2_classical.cfg",
                             "fig3.cfg", "fig3_strong.cfg"}) {
        SCOPED_TRACE(name);
        const Scenario s = load_scenario_file(scenario_path(name));
        EXPECT_GE(s.size(), 3u);
        for (const auto& e : s.emitters) {
            EXPECT_DOUBLE_EQ(e.gap, 2.0);
            EXPECT_DOUBLE_EQ(e.smearing_radius, 0.5);
        }
    }
    const Scenario fig1 = load_scenario_file(scenario_path("fig1.cfg"));
    ASSERT_EQ(fig1.size(), 3u);
    EXPECT_DOUBLE_EQ(fig1.emitters[1].position.x, 6.5);
    EXPECT_DOUBLE_EQ(fig1.emitters[2].coupling_time, 3.0);
    EXPECT_DOUBLE_EQ(fig1.evaluation_time, 8.0);

    const Scenario fig2b = load_scenario_file(scenario_path("fig2b.cfg"));
    ASSERT_EQ(fig2b.size(), 4u);
    EXPECT_DOUBLE_EQ(fig2b.receiver->coupling_strength, 2.0);
    EXPECT_DOUBLE_EQ(fig2b.receiver->coupling_time, 8.0);
    const auto& amps = fig2b.emitter_state.components()[0].amplitudes;
    EXPECT_NEAR(amps[excited_index(4, 3)].real(), -0.5, 1e-15);
}
