#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loopforge/controller.hpp"
#include "loopforge/errors.hpp"
#include "loopforge/learning.hpp"
#include "loopforge/network.hpp"
#include "loopforge/plant.hpp"
#include "loopforge/sensing.hpp"

namespace loopforge {

// Normalized sensor channels are followed by the controller's active gain
// scales, each mapped log-linearly from [min_scale, max_scale] onto [0, 1].
inline constexpr std::size_t kControllerFeatureCount = 2;

std::vector<double> decision_features(const NormalizedFrame& frame, const PDGains& gains,
                                      const ActionTable& table);

enum class ScenarioKind { tracking, fault_recovery, vibration };
enum class ControllerVariant { fixed_baseline, adaptive };

std::string_view to_string(ScenarioKind kind) noexcept;
std::string_view to_string(ControllerVariant variant) noexcept;
ScenarioKind parse_scenario_kind(std::string_view text);
ControllerVariant parse_controller_variant(std::string_view text);

// Task setpoint: cycle c targets levels[c % levels.size()].
struct SetpointProfile {
    std::vector<double> levels{0.0};

    double target(std::size_t cycle) const { return levels[cycle % levels.size()]; }
};

// External torque disturbances. Realizations depend only on the disturbance
// seed, never on the controller, so paired arms see identical inputs.
struct DisturbanceSpec {
    double bias_std = 0.0;            // N*m, constant per cycle
    double vibration_amplitude = 0.0; // N*m
    double vibration_frequency = 0.0; // Hz, random phase per episode
    double noise_std = 0.0;           // N*m, redrawn every control period
};

struct SensingConfig {
    std::vector<double> noise_std{0.001, 0.01, 0.0, 0.05, 0.01, 0.001};
    std::size_t calibration_frames = 200;
    // Square-wave excitation around the first setpoint level during warm-up.
    double calibration_amplitude = 0.5;
};

struct ControllerConfig {
    PDGains nominal{20.0, 8.0};
    double tau_max = kDefaultTauMax;
    ActionTable actions = ActionTable::standard({20.0, 8.0});
};

struct NetworkConfig {
    std::vector<std::size_t> hidden{16};
};

struct LearningConfig {
    TrainingConfig training{};
    RewardWeights reward{};
    double epsilon = 0.1;
    double epsilon_decay = 0.95;
    std::size_t train_every_cycles = 1;
    // Control ticks a network decision is held for; between decisions the
    // controller applies action 0.
    std::size_t decision_period_ticks = 1;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::tracking;
    ControllerVariant variant = ControllerVariant::adaptive;
    double duration = 40.0; // s
    std::size_t cycles = 20;
    std::uint64_t seed = 1;
    std::size_t replicates = 5;
    double success_tolerance = 0.02; // rad
    double success_tail_fraction = 0.2;
    double recovery_hold = 1.0; // s

    PlantParameters plant{};
    std::size_t control_period_steps = 10;
    ThermalModel thermal{};
    SetpointProfile setpoint{};
    DisturbanceSpec disturbance{};
    std::vector<FaultEvent> faults;
    SensingConfig sensing{};
    ControllerConfig controller{};
    NetworkConfig network{};
    LearningConfig learning{};

    double control_period() const noexcept { return plant.dt * static_cast<double>(control_period_steps); }
    std::size_t total_ticks() const;
    std::size_t ticks_per_cycle() const;
    std::vector<std::size_t> layer_sizes() const;
    std::size_t feature_count() const noexcept { return kChannelCount + kControllerFeatureCount; }

    void validate() const;
};

struct TraceRecord {
    double time = 0.0;
    double q = 0.0;
    double q_dot = 0.0;
    double q_d = 0.0;
    double tau = 0.0;
    std::size_t action = 0;
    double reward = 0.0;
    double energy = 0.0;      // cumulative input work, J
    double useful_work = 0.0; // cumulative output work, J
    bool fault_active = false;

    double error() const noexcept { return q - q_d; }
};

struct EpisodeTrace {
    std::uint64_t seed = 0;
    std::vector<TraceRecord> records;
};

struct FaultResponse {
    double onset = 0.0;
    double response_time = 0.0; // censored at trace end when not recovered
    bool recovered = false;
};

struct EpisodeMetrics {
    double success_rate = 0.0;
    std::optional<double> mean_fault_response;
    double positional_error_variance = 0.0;
    double energy_per_task = 0.0;
    std::optional<double> efficiency;

    std::vector<bool> cycle_success;
    std::vector<FaultResponse> fault_responses;
};

struct EpisodeResult {
    EpisodeTrace trace;
    EpisodeMetrics metrics;
    NetworkParameters final_params;
    std::size_t training_rounds = 0;
};

// Carries the partial trace up to the failing tick.
class EpisodeError : public Error {
public:
    EpisodeError(const std::string& what, EpisodeTrace partial)
        : Error(what), partial_(std::move(partial)) {}
    const EpisodeTrace& partial_trace() const noexcept { return partial_; }

private:
    EpisodeTrace partial_;
};

// Independent generator streams derived from one master seed.
enum class SeedStream : std::uint64_t {
    sensor_noise = 1,
    disturbance = 2,
    network_init = 3,
    exploration = 4,
    training = 5,
    calibration = 6,
};

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream);

EpisodeResult run_episode(const ScenarioConfig& config);

EpisodeMetrics compute_metrics(const EpisodeTrace& trace, const ScenarioConfig& config);

struct ArmOutcome {
    ControllerVariant variant = ControllerVariant::fixed_baseline;
    std::uint64_t seed = 0;
    std::optional<EpisodeMetrics> metrics;
    std::string failure;
};

struct MetricSummary {
    std::string name;
    std::optional<double> baseline_mean;
    std::optional<double> baseline_variance;
    std::optional<double> adaptive_mean;
    std::optional<double> adaptive_variance;
    std::optional<double> ratio;      // adaptive_mean / baseline_mean
    std::optional<double> difference; // adaptive_mean - baseline_mean
};

struct ComparisonReport {
    ScenarioKind kind = ScenarioKind::tracking;
    std::vector<std::uint64_t> seeds;
    std::vector<ArmOutcome> baseline;
    std::vector<ArmOutcome> adaptive;
    std::vector<MetricSummary> summary;

    bool ok() const noexcept;
};

struct ComparisonArms {
    ControllerVariant baseline = ControllerVariant::fixed_baseline;
    ControllerVariant adaptive = ControllerVariant::adaptive;
};

// Replicate i runs with seed config.seed + i; both arms share that seed and so
// every disturbance, noise and fault realization.
ComparisonReport run_comparison(const ScenarioConfig& config, ComparisonArms arms = {});

} // namespace loopforge
