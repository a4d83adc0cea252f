#include "loopforge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace loopforge {

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
    case ScenarioKind::tracking: return "tracking";
    case ScenarioKind::fault_recovery: return "fault-recovery";
    case ScenarioKind::vibration: return "vibration";
    }
    return "unknown";
}

std::string_view to_string(ControllerVariant variant) noexcept {
    switch (variant) {
    case ControllerVariant::fixed_baseline: return "fixed-baseline";
    case ControllerVariant::adaptive: return "adaptive";
    }
    return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
    if (text == "tracking") return ScenarioKind::tracking;
    if (text == "fault-recovery") return ScenarioKind::fault_recovery;
    if (text == "vibration") return ScenarioKind::vibration;
    throw ConfigError(fmt::format("unknown scenario kind '{}'", text), "/scenario/kind");
}

ControllerVariant parse_controller_variant(std::string_view text) {
    if (text == "fixed-baseline") return ControllerVariant::fixed_baseline;
    if (text == "adaptive") return ControllerVariant::adaptive;
    throw ConfigError(fmt::format("unknown controller variant '{}'", text), "/scenario/variant");
}

std::size_t ScenarioConfig::total_ticks() const {
    return static_cast<std::size_t>(std::llround(duration / control_period()));
}

std::size_t ScenarioConfig::ticks_per_cycle() const { return total_ticks() / cycles; }

std::vector<std::size_t> ScenarioConfig::layer_sizes() const {
    std::vector<std::size_t> sizes{feature_count()};
    sizes.insert(sizes.end(), network.hidden.begin(), network.hidden.end());
    sizes.push_back(controller.actions.size());
    return sizes;
}

void ScenarioConfig::validate() const {
    plant.validate();
    if (control_period_steps == 0) {
        throw ConfigError("control period must be at least one physics step",
                          "/plant/control_period_steps");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw ConfigError("duration must be positive", "/scenario/duration");
    }
    if (cycles == 0) {
        throw ConfigError("cycles must be >= 1", "/scenario/cycles");
    }
    const double ticks = duration / control_period();
    if (std::abs(ticks - std::round(ticks)) > 1e-6) {
        throw ConfigError("duration must be a whole number of control periods", "/scenario/duration");
    }
    if (total_ticks() % cycles != 0) {
        throw ConfigError("control ticks must divide evenly into cycles", "/scenario/cycles");
    }
    if (replicates == 0) {
        throw ConfigError("replicates must be >= 1", "/scenario/replicates");
    }
    if (!(success_tolerance > 0.0)) {
        throw ConfigError("success tolerance must be positive", "/scenario/success_tolerance");
    }
    if (!(success_tail_fraction > 0.0 && success_tail_fraction <= 1.0)) {
        throw ConfigError("success tail fraction must lie in (0, 1]", "/scenario/success_tail_fraction");
    }
    if (!(recovery_hold >= 0.0)) {
        throw ConfigError("recovery hold must be non-negative", "/scenario/recovery_hold");
    }
    if (setpoint.levels.empty()) {
        throw ConfigError("setpoint profile needs at least one level", "/scenario/setpoint/levels");
    }
    for (double v : setpoint.levels) {
        if (!std::isfinite(v)) throw ConfigError("setpoint levels must be finite", "/scenario/setpoint/levels");
    }
    const auto& d = disturbance;
    if (d.bias_std < 0.0 || d.vibration_amplitude < 0.0 || d.vibration_frequency < 0.0 || d.noise_std < 0.0) {
        throw ConfigError("disturbance parameters must be non-negative", "/disturbance");
    }
    for (std::size_t i = 0; i < faults.size(); ++i) {
        try {
            faults[i].validate();
        } catch (const ConfigError& e) {
            throw ConfigError(e.detail(), fmt::format("/faults/{}", i));
        }
    }
    if (sensing.noise_std.size() != kChannelCount) {
        throw ConfigError(fmt::format("sensor noise needs {} entries", kChannelCount), "/sensing/noise");
    }
    for (double s : sensing.noise_std) {
        if (!(s >= 0.0)) throw ConfigError("sensor noise must be non-negative", "/sensing/noise");
    }
    if (sensing.calibration_frames == 0) {
        throw ConfigError("calibration window must hold at least one frame",
                          "/sensing/calibration_frames");
    }
    if (!(controller.tau_max > 0.0)) {
        throw ConfigError("tau_max must be positive", "/controller/tau_max");
    }
    if (controller.nominal.kp < 0.0 || controller.nominal.kd < 0.0) {
        throw ConfigError("gains must be non-negative", "/controller/gains");
    }
    controller.actions.validate();
    for (std::size_t h : network.hidden) {
        if (h == 0) throw ConfigError("hidden layer sizes must be >= 1", "/network/hidden");
    }
    learning.training.validate();
    learning.reward.validate();
    if (!(learning.epsilon >= 0.0 && learning.epsilon <= 1.0)) {
        throw ConfigError("epsilon must lie in [0, 1]", "/training/epsilon");
    }
    if (!(learning.epsilon_decay >= 0.0 && learning.epsilon_decay <= 1.0)) {
        throw ConfigError("epsilon decay must lie in [0, 1]", "/training/epsilon_decay");
    }
    if (learning.decision_period_ticks == 0 || ticks_per_cycle() % learning.decision_period_ticks != 0) {
        throw ConfigError("decision period must divide the ticks per cycle",
                          "/training/decision_period_ticks");
    }
    if (learning.train_every_cycles == 0) {
        throw ConfigError("training interval must be >= 1 cycle", "/training/train_every_cycles");
    }
}

std::vector<double> decision_features(const NormalizedFrame& frame, const PDGains& gains,
                                      const ActionTable& table) {
    std::vector<double> features = frame.values;
    const double span = std::log(table.max_scale / table.min_scale);
    const auto position = [&](double value, double nominal) {
        if (!(nominal > 0.0) || !(span > 0.0)) return 0.0;
        return std::clamp(std::log(value / nominal / table.min_scale) / span, 0.0, 1.0);
    };
    features.push_back(position(gains.kp, table.nominal.kp));
    features.push_back(position(gains.kd, table.nominal.kd));
    return features;
}

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t out[2];
    seq.generate(std::begin(out), std::end(out));
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

// Pre-drawn disturbance realization, independent of the controller.
struct DisturbanceTrack {
    std::vector<double> cycle_bias;
    std::vector<double> tick_noise;
    double phase = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;

    double at(std::size_t cycle, std::size_t tick, double t) const {
        return cycle_bias[cycle] + tick_noise[tick] + amplitude * std::sin(omega * t + phase);
    }
};

DisturbanceTrack draw_disturbance(const ScenarioConfig& config) {
    std::mt19937_64 rng(derive_seed(config.seed, SeedStream::disturbance));
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    DisturbanceTrack track;
    track.phase = angle(rng);
    track.amplitude = config.disturbance.vibration_amplitude;
    track.omega = 2.0 * std::numbers::pi * config.disturbance.vibration_frequency;
    track.cycle_bias.resize(config.cycles);
    for (double& b : track.cycle_bias) b = config.disturbance.bias_std * unit(rng);
    track.tick_noise.resize(config.total_ticks());
    for (double& n : track.tick_noise) n = config.disturbance.noise_std * unit(rng);
    return track;
}

std::vector<FaultEvent> active_at(const std::vector<FaultEvent>& faults, double t) {
    std::vector<FaultEvent> active;
    for (const auto& f : faults) {
        if (f.active_at(t)) active.push_back(f);
    }
    return active;
}

// Joint, thermal and energy state of one plant instance.
struct PlantSim {
    JointState state{};
    ThermalModel thermal{};
    EnergyAccount energy{};
    double last_tau = 0.0;
    double vibration = 0.0;
};

// Advances one control period with a held torque command.
void advance_period(PlantSim& sim, const ScenarioConfig& config, double t0, double tau,
                    double disturbance, double target, double kp) {
    const auto& p = config.plant;
    double vib = 0.0;
    for (std::size_t i = 0; i < config.control_period_steps; ++i) {
        const double ts = t0 + static_cast<double>(i) * p.dt;
        const auto faults = active_at(config.faults, ts);
        const double e_prev = target - sim.state.q;
        const JointState next = step(p, sim.state, tau + disturbance, faults);
        const double e_now = target - next.q;
        const double potential_drop = 0.5 * kp * (e_prev * e_prev - e_now * e_now);
        vib += std::abs(next.q_dot - sim.state.q_dot) / p.dt;
        sim.state = next;
        sim.energy = accumulate_energy(sim.energy, tau, next.q_dot, potential_drop, p.dt);
        sim.thermal.advance(tau, p.dt, faults);
    }
    sim.vibration = vib / static_cast<double>(config.control_period_steps);
    sim.last_tau = tau;
}

// Disturbance-free warm-up under nominal gains; the first calibration_frames
// readings fix the normalization ranges.
ChannelCalibration warm_up_calibration(const ScenarioConfig& config) {
    std::mt19937_64 rng(derive_seed(config.seed, SeedStream::calibration));
    PlantSim sim;
    sim.thermal = config.thermal;
    ScenarioConfig quiet = config;
    quiet.faults.clear();
    const std::size_t frames = config.sensing.calibration_frames;
    const std::size_t half = std::max<std::size_t>(1, frames / 4);
    const double center = config.setpoint.levels.front();
    std::vector<SensorFrame> window;
    window.reserve(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) * config.control_period();
        const double target =
            center + ((k / half) % 2 == 0 ? 1.0 : -1.0) * config.sensing.calibration_amplitude;
        PlantReadout aux{sim.last_tau, sim.thermal.temperature, sim.vibration, target, 0.0};
        auto frame = sample_sensors(sim.state, aux, t, config.sensing.noise_std, rng);
        const JointState measured{frame.at(Channel::position), frame.at(Channel::velocity)};
        const auto cmd = pd_torque(config.controller.nominal, {target, 0.0}, measured,
                                   config.controller.tau_max);
        window.push_back(std::move(frame));
        advance_period(sim, quiet, t, cmd.tau, 0.0, target, config.controller.nominal.kp);
    }
    return calibrate(window);
}

} // namespace

EpisodeResult run_episode(const ScenarioConfig& config) {
    config.validate();
    const bool adaptive = config.variant == ControllerVariant::adaptive;
    const std::size_t total = config.total_ticks();
    const std::size_t per_cycle = config.ticks_per_cycle();
    const double period = config.control_period();
    const auto& table = config.controller.actions;

    EpisodeResult result;
    result.trace.seed = config.seed;
    result.trace.records.reserve(total);

    const DisturbanceTrack disturbance = draw_disturbance(config);
    std::mt19937_64 noise_rng(derive_seed(config.seed, SeedStream::sensor_noise));
    std::mt19937_64 explore_rng(derive_seed(config.seed, SeedStream::exploration));
    const std::uint64_t training_seed = derive_seed(config.seed, SeedStream::training);

    NetworkParameters params;
    ChannelCalibration calibration;
    if (adaptive) {
        params = init_params(config.layer_sizes(), derive_seed(config.seed, SeedStream::network_init));
        calibration = warm_up_calibration(config);
    }

    PlantSim sim;
    sim.thermal = config.thermal;
    PDGains gains = config.controller.nominal;
    Setpoint adjustment{};
    double epsilon = config.learning.epsilon;
    const std::size_t decision_period = config.learning.decision_period_ticks;
    std::vector<Transition> segment;

    try {
        for (std::size_t k = 0; k < total; ++k) {
            const double t = static_cast<double>(k) * period;
            const std::size_t cycle = k / per_cycle;
            const double target = config.setpoint.target(cycle);
            const auto faults_now = active_at(config.faults, t);

            PlantReadout aux{sim.last_tau, sim.thermal.temperature, sim.vibration,
                             target + adjustment.q_d, sensor_offset(faults_now)};
            const SensorFrame frame = sample_sensors(sim.state, aux, t, config.sensing.noise_std, noise_rng);

            std::size_t action = 0;
            const bool deciding = adaptive && k % decision_period == 0;
            std::vector<double> features;
            if (deciding) {
                features = decision_features(normalize(frame, calibration), gains, table);
                const auto trace = forward(params, features);
                action = epsilon_greedy(softmax(trace.logits()), epsilon, explore_rng);
                std::tie(gains, adjustment) = apply_action(action, table, gains, adjustment);
            }

            const JointState measured{frame.at(Channel::position), frame.at(Channel::velocity)};
            const Setpoint sp{target + adjustment.q_d, 0.0};
            const TorqueCommand cmd = pd_torque(gains, sp, measured, config.controller.tau_max);

            TraceRecord row;
            row.time = t;
            row.q = sim.state.q;
            row.q_dot = sim.state.q_dot;
            row.q_d = target;
            row.tau = cmd.tau;
            row.action = action;
            row.fault_active = !faults_now.empty();

            const double input_before = sim.energy.input_work;
            advance_period(sim, config, t, cmd.tau, disturbance.at(cycle, k, t), target, gains.kp);

            const double error_after = target - sim.state.q;
            const bool unrecovered =
                row.fault_active && std::abs(error_after) >= config.success_tolerance;
            row.reward = step_reward(error_after, sim.energy.input_work - input_before, unrecovered,
                                     config.learning.reward);
            row.energy = sim.energy.input_work;
            row.useful_work = sim.energy.output_work;
            result.trace.records.push_back(row);

            if (!adaptive) continue;
            if (deciding) {
                if (!segment.empty()) segment.back().next_features = features;
                segment.push_back({features, action, 0.0, features, false});
            }
            // Decision reward is the mean per-tick reward over the hold, so the
            // return scale does not depend on the decision period.
            segment.back().reward += row.reward / static_cast<double>(decision_period);

            const bool cycle_end = (k + 1) % per_cycle == 0;
            if (cycle_end && (cycle + 1) % config.learning.train_every_cycles == 0) {
                segment.back().terminal = true;
                TrainingConfig training = config.learning.training;
                training.seed = training_seed + result.training_rounds;
                params = train_policy(params, std::span<const std::vector<Transition>>(&segment, 1), training);
                ++result.training_rounds;
                epsilon *= config.learning.epsilon_decay;
                segment.clear();
            }
        }
    } catch (const Error& e) {
        throw EpisodeError(fmt::format("episode failed at t={}: {}",
                                       result.trace.records.size() * period, e.what()),
                           result.trace);
    }

    result.metrics = compute_metrics(result.trace, config);
    result.final_params = std::move(params);
    return result;
}

EpisodeMetrics compute_metrics(const EpisodeTrace& trace, const ScenarioConfig& config) {
    const auto& rows = trace.records;
    if (rows.empty()) {
        throw MetricsError("cannot compute metrics of an empty trace");
    }
    const std::size_t total = config.total_ticks();
    if (rows.size() != total) {
        throw MetricsError(fmt::format("trace has {} ticks, config implies {}", rows.size(), total));
    }
    const double period = config.control_period();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double expected = static_cast<double>(k) * period;
        if (std::abs(rows[k].time - expected) > 1e-6 * std::max(1.0, expected)) {
            throw MetricsError(fmt::format("tick {} at t={} does not match the control period", k,
                                           rows[k].time));
        }
    }

    EpisodeMetrics m;
    const double tol = config.success_tolerance;
    const auto in_band = [tol](const TraceRecord& r) { return std::abs(r.error()) < tol; };

    const std::size_t per_cycle = config.ticks_per_cycle();
    const auto tail = static_cast<std::size_t>(
        std::ceil(config.success_tail_fraction * static_cast<double>(per_cycle) - 1e-9));
    std::size_t successes = 0;
    for (std::size_t c = 0; c < config.cycles; ++c) {
        const std::size_t end = (c + 1) * per_cycle;
        const std::size_t begin = end - std::max<std::size_t>(1, tail);
        bool ok = true;
        for (std::size_t k = begin; k < end; ++k) ok = ok && in_band(rows[k]);
        m.cycle_success.push_back(ok);
        successes += ok ? 1 : 0;
    }
    m.success_rate = static_cast<double>(successes) / static_cast<double>(config.cycles);

    // run[k]: consecutive in-band ticks starting at k.
    std::vector<std::size_t> run(rows.size() + 1, 0);
    for (std::size_t k = rows.size(); k-- > 0;) run[k] = in_band(rows[k]) ? run[k + 1] + 1 : 0;
    const auto hold_ticks = static_cast<std::size_t>(std::ceil(config.recovery_hold / period - 1e-9));
    const double end_time = static_cast<double>(rows.size()) * period;

    auto faults = config.faults;
    std::stable_sort(faults.begin(), faults.end(),
                     [](const auto& a, const auto& b) { return a.onset < b.onset; });
    double response_sum = 0.0;
    for (const auto& f : faults) {
        if (f.onset >= end_time) continue;
        FaultResponse fr;
        fr.onset = f.onset;
        auto k = static_cast<std::size_t>(std::ceil(f.onset / period - 1e-9));
        for (; k < rows.size(); ++k) {
            if (run[k] >= std::max<std::size_t>(1, hold_ticks)) break;
        }
        fr.recovered = k < rows.size();
        fr.response_time = (fr.recovered ? rows[k].time : end_time) - f.onset;
        response_sum += fr.response_time;
        m.fault_responses.push_back(fr);
    }
    if (!m.fault_responses.empty()) {
        m.mean_fault_response = response_sum / static_cast<double>(m.fault_responses.size());
    }

    double mean = 0.0;
    for (const auto& r : rows) mean += r.error();
    mean /= static_cast<double>(rows.size());
    double ss = 0.0;
    for (const auto& r : rows) ss += (r.error() - mean) * (r.error() - mean);
    m.positional_error_variance = ss / static_cast<double>(rows.size());

    const auto& last = rows.back();
    m.energy_per_task = last.energy / static_cast<double>(config.cycles);
    if (last.energy > 0.0) {
        m.efficiency = std::clamp(last.useful_work * 100.0 / last.energy, 0.0, 100.0);
    }
    return m;
}

bool ComparisonReport::ok() const noexcept {
    const auto good = [](const ArmOutcome& a) { return a.metrics.has_value(); };
    return std::all_of(baseline.begin(), baseline.end(), good) &&
           std::all_of(adaptive.begin(), adaptive.end(), good);
}

namespace {

ArmOutcome run_arm(ScenarioConfig config, ControllerVariant variant, std::uint64_t seed) {
    config.variant = variant;
    config.seed = seed;
    ArmOutcome out;
    out.variant = variant;
    out.seed = seed;
    try {
        out.metrics = run_episode(config).metrics;
    } catch (const Error& e) {
        out.failure = e.what();
    }
    return out;
}

struct Moments {
    std::optional<double> mean;
    std::optional<double> variance;
};

template <typename Getter>
Moments moments(const std::vector<ArmOutcome>& arms, Getter get) {
    std::vector<double> values;
    for (const auto& a : arms) {
        if (!a.metrics) continue;
        if (auto v = get(*a.metrics)) values.push_back(*v);
    }
    Moments m;
    if (values.empty()) return m;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    m.mean = mean;
    m.variance = values.size() > 1 ? ss / static_cast<double>(values.size() - 1) : 0.0;
    return m;
}

} // namespace

ComparisonReport run_comparison(const ScenarioConfig& config, ComparisonArms arms) {
    config.validate();
    ComparisonReport report;
    report.kind = config.kind;
    for (std::size_t i = 0; i < config.replicates; ++i) report.seeds.push_back(config.seed + i);

    std::vector<std::future<ArmOutcome>> base_jobs;
    std::vector<std::future<ArmOutcome>> adaptive_jobs;
    for (auto seed : report.seeds) {
        base_jobs.push_back(std::async(std::launch::async, run_arm, config, arms.baseline, seed));
        adaptive_jobs.push_back(std::async(std::launch::async, run_arm, config, arms.adaptive, seed));
    }
    for (auto& j : base_jobs) report.baseline.push_back(j.get());
    for (auto& j : adaptive_jobs) report.adaptive.push_back(j.get());

    using Get = std::optional<double> (*)(const EpisodeMetrics&);
    const std::pair<const char*, Get> metrics[] = {
        {"success_rate", [](const EpisodeMetrics& m) -> std::optional<double> { return m.success_rate; }},
        {"mean_fault_response", [](const EpisodeMetrics& m) { return m.mean_fault_response; }},
        {"positional_error_variance",
         [](const EpisodeMetrics& m) -> std::optional<double> { return m.positional_error_variance; }},
        {"energy_per_task", [](const EpisodeMetrics& m) -> std::optional<double> { return m.energy_per_task; }},
        {"efficiency", [](const EpisodeMetrics& m) { return m.efficiency; }},
    };
    for (const auto& [name, get] : metrics) {
        MetricSummary s;
        s.name = name;
        const auto b = moments(report.baseline, get);
        const auto a = moments(report.adaptive, get);
        s.baseline_mean = b.mean;
        s.baseline_variance = b.variance;
        s.adaptive_mean = a.mean;
        s.adaptive_variance = a.variance;
        if (b.mean && a.mean) {
            s.difference = *a.mean - *b.mean;
            if (*b.mean != 0.0) {
                s.ratio = *a.mean / *b.mean;
            } else if (*a.mean == 0.0) {
                s.ratio = 1.0;
            }
        }
        report.summary.push_back(std::move(s));
    }
    return report;
}

} // namespace loopforge
