#include <cmath>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "loopforge/errors.hpp"
#include "loopforge/io.hpp"
#include "support.hpp"

using namespace loopforge;

namespace {

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n' ? 1 : 0;
    return n;
}

ScenarioConfig short_config() {
    auto config = load_scenario(test::scenario_path("disturbance.json"));
    config.duration = 12.0;
    config.cycles = 4;
    return config;
}

std::string config_error_message(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(FormatNumber, NineSignificantDigits) {
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
    EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(ParseScenario, ShippedScenariosLoad) {
    for (const char* name : {"disturbance.json", "tracking.json", "fault_recovery.json", "vibration.json"}) {
        EXPECT_NO_THROW(load_scenario(test::scenario_path(name))) << name;
    }
    const auto faults = load_scenario(test::scenario_path("fault_recovery.json"));
    EXPECT_EQ(faults.kind, ScenarioKind::fault_recovery);
    EXPECT_EQ(faults.faults.size(), 10u);
    EXPECT_EQ(faults.duration, 600.0);
}

TEST(ParseScenario, MinimalDocumentUsesDefaults) {
    const auto c = parse_scenario(R"({"format_version": 1, "scenario": {"kind": "vibration"}})");
    EXPECT_EQ(c.kind, ScenarioKind::vibration);
    EXPECT_EQ(c.cycles, 20u);
    EXPECT_EQ(c.setpoint.levels, std::vector<double>{0.0});
}

TEST(ParseScenario, SerializedConfigReparsesIdentically) {
    const auto c = load_scenario(test::scenario_path("fault_recovery.json"));
    const auto text = scenario_to_json(c);
    EXPECT_EQ(scenario_to_json(parse_scenario(text)), text);
}

TEST(ParseScenario, SyntaxErrorNamesLineAndColumn) {
    const auto msg = config_error_message("{\n  \"format_version\": 1,\n  \"scenario\": { \"kind\": \"tracking\", }\n}\n");
    EXPECT_NE(msg.find("line 3, column"), std::string::npos) << msg;
}

TEST(ParseScenario, UnknownFieldNamesLineAndPointer) {
    const auto msg = config_error_message(
        "{\n  \"format_version\": 1,\n  \"scenario\": {\n    \"kind\": \"tracking\",\n    \"cyclez\": 3\n  }\n}\n");
    EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/scenario/cyclez"), std::string::npos) << msg;
}

TEST(ParseScenario, TypeAndValueErrors) {
    EXPECT_THROW(parse_scenario(R"({"format_version": 1, "scenario": {"cycles": "many"}})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"format_version": 1, "scenario": {"cycles": -3}})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"format_version": 1, "scenario": {"kind": "juggling"}})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"format_version": 2, "scenario": {}})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"format_version": 1})"), ConfigError);
    EXPECT_THROW(parse_scenario(
                     R"({"format_version": 1, "scenario": {}, "faults": [{"onset": 1, "duration": 0, "kind": "bias-torque", "magnitude": 1}]})"),
                 ConfigError);
}

TEST(LoadScenario, MissingFileNamesPath) {
    try {
        load_scenario("/nonexistent/dir/scenario.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/scenario.json"), std::string::npos);
    }
}

TEST(TraceCsv, EmptyTraceIsHeaderOnly) {
    test::TempDir dir;
    write_trace_csv(EpisodeTrace{}, dir / "t.csv");
    EXPECT_EQ(read_text_file(dir / "t.csv"),
              "seed,time,q,q_dot,q_d,tau,action,reward,energy,useful_work,fault_active\n");
    EXPECT_TRUE(read_trace_csv(dir / "t.csv").records.empty());
}

TEST(TraceCsv, RowCountMatchesDurationOverPeriod) {
    test::TempDir dir;
    const auto config = short_config();
    const auto result = run_episode(config);
    write_trace_csv(result.trace, dir / "t.csv");
    const auto expected = static_cast<std::size_t>(std::llround(config.duration / config.control_period()));
    EXPECT_EQ(count_lines(read_text_file(dir / "t.csv")), expected + 1);
}

TEST(TraceCsv, RecomputedMetricsMatchExactly) {
    test::TempDir dir;
    auto config = load_scenario(test::scenario_path("fault_recovery.json"));
    config.duration = 120.0;
    config.cycles = 2;
    config.faults.resize(2);
    const auto result = run_episode(config);
    write_trace_csv(result.trace, dir / "t.csv");
    const auto back = read_trace_csv(dir / "t.csv");
    EXPECT_EQ(back.seed, result.trace.seed);
    const auto m = compute_metrics(back, config);
    EXPECT_EQ(metrics_to_json(m, 1), metrics_to_json(result.metrics, 1));
    EXPECT_EQ(m.positional_error_variance, result.metrics.positional_error_variance);
    EXPECT_EQ(m.mean_fault_response, result.metrics.mean_fault_response);
}

TEST(TraceCsv, MalformedFileRejected) {
    test::TempDir dir;
    write_text_file(dir / "bad.csv", "seed,time\n1,2\n");
    EXPECT_THROW(read_trace_csv(dir / "bad.csv"), Error);
    EXPECT_THROW(read_trace_csv(dir / "missing.csv"), Error);
}

TEST(MetricsJson, RoundTripPreservesRecord) {
    test::TempDir dir;
    auto config = load_scenario(test::scenario_path("fault_recovery.json"));
    config.duration = 120.0;
    config.cycles = 2;
    config.faults.resize(2);
    const auto m = run_episode(config).metrics;
    write_metrics_json(m, 9, dir / "m.json");
    const auto back = read_metrics_json(dir / "m.json");
    EXPECT_EQ(metrics_to_json(back, 9), read_text_file(dir / "m.json"));
    EXPECT_EQ(back.cycle_success, m.cycle_success);
    EXPECT_EQ(back.success_rate, m.success_rate);
    ASSERT_EQ(back.fault_responses.size(), m.fault_responses.size());
    ASSERT_TRUE(back.mean_fault_response.has_value());
    EXPECT_NEAR(*back.mean_fault_response, *m.mean_fault_response, 1e-8 * *m.mean_fault_response);
    EXPECT_NEAR(back.energy_per_task, m.energy_per_task, 1e-8 * m.energy_per_task);
}

TEST(MetricsJson, AbsentFaultResponseStaysAbsent) {
    EpisodeMetrics m;
    m.success_rate = 1.0;
    m.cycle_success = {true};
    const auto back = metrics_from_json(metrics_to_json(m, 3));
    EXPECT_FALSE(back.mean_fault_response.has_value());
    EXPECT_FALSE(back.efficiency.has_value());
}

TEST(Series, HeadersRowsAndAppend) {
    test::TempDir dir;
    const auto config = short_config();
    const auto result = run_episode(config);
    write_success_series(result.metrics, 1, "adaptive", dir / "s.csv");
    write_success_series(result.metrics, 1, "baseline", dir / "s.csv", true);
    const auto text = read_text_file(dir / "s.csv");
    EXPECT_EQ(text.rfind("seed,arm,cycle,success\n", 0), 0u);
    EXPECT_EQ(count_lines(text), 1 + 2 * config.cycles);
    write_error_series(result.trace, "adaptive", dir / "e.csv");
    EXPECT_EQ(count_lines(read_text_file(dir / "e.csv")), 1 + config.total_ticks());
    write_fault_series(result.metrics, 1, "adaptive", dir / "f.csv");
    EXPECT_EQ(read_text_file(dir / "f.csv"), "seed,arm,fault,onset,response_time,recovered\n");
}

TEST(Export, UnwritablePathIsExportError) {
    EXPECT_THROW(write_text_file("/nonexistent/dir/out.txt", "x"), ExportError);
}
