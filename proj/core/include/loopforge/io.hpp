#pragma once

#include <filesystem>
#include <string>

#include "loopforge/harness.hpp"

namespace loopforge {

inline constexpr int kScenarioFormatVersion = 1;

// Renders a double with 9 significant digits.
std::string format_number(double value);

// Scenario JSON. Syntax errors carry a line/column; schema errors carry the
// JSON pointer of the offending field.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioConfig& config);

// Trace CSV, one row per control tick. Columns:
//   seed,time,q,q_dot,q_d,tau,action,reward,energy,useful_work,fault_active
// Trace values are written with round-trip precision so metrics recomputed
// from the file match the in-memory run bit for bit.
void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path);
EpisodeTrace read_trace_csv(const std::filesystem::path& path);

std::string metrics_to_json(const EpisodeMetrics& metrics, std::uint64_t seed);
EpisodeMetrics metrics_from_json(const std::string& text);
void write_metrics_json(const EpisodeMetrics& metrics, std::uint64_t seed,
                        const std::filesystem::path& path);
EpisodeMetrics read_metrics_json(const std::filesystem::path& path);

std::string report_to_json(const ComparisonReport& report);
void write_report_json(const ComparisonReport& report, const std::filesystem::path& path);

// Plot-ready series, tidy CSV with an `arm` label column.
//   success_per_cycle.csv:  seed,arm,cycle,success
//   fault_response.csv:     seed,arm,fault,onset,response_time,recovered
//   error_series.csv:       seed,arm,time,error
void write_success_series(const EpisodeMetrics& metrics, std::uint64_t seed,
                          const std::string& arm, const std::filesystem::path& path,
                          bool append = false);
void write_fault_series(const EpisodeMetrics& metrics, std::uint64_t seed,
                        const std::string& arm, const std::filesystem::path& path,
                        bool append = false);
void write_error_series(const EpisodeTrace& trace, const std::string& arm,
                        const std::filesystem::path& path, bool append = false);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace loopforge
