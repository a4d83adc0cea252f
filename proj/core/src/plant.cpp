#include "loopforge/plant.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "loopforge/errors.hpp"

namespace loopforge {

void PlantParameters::validate() const {
    if (!(inertia > 0.0) || !std::isfinite(inertia)) {
        throw ConfigError(fmt::format("inertia must be positive, got {}", inertia), "/plant/inertia");
    }
    if (!(friction >= 0.0) || !std::isfinite(friction)) {
        throw ConfigError(fmt::format("friction must be non-negative, got {}", friction),
                          "/plant/friction");
    }
    if (!(dt > 0.0) || dt > 0.01) {
        throw ConfigError(fmt::format("dt must lie in (0, 0.01], got {}", dt), "/plant/dt");
    }
}

std::string_view to_string(FaultKind kind) noexcept {
    switch (kind) {
    case FaultKind::bias_torque: return "bias-torque";
    case FaultKind::sensor_offset: return "sensor-offset";
    case FaultKind::overheat_drift: return "overheat-drift";
    }
    return "unknown";
}

FaultKind parse_fault_kind(std::string_view text) {
    if (text == "bias-torque") return FaultKind::bias_torque;
    if (text == "sensor-offset") return FaultKind::sensor_offset;
    if (text == "overheat-drift") return FaultKind::overheat_drift;
    throw ConfigError(fmt::format("unknown fault kind '{}'", text));
}

void FaultEvent::validate() const {
    if (!(onset >= 0.0) || !std::isfinite(onset)) {
        throw ConfigError("fault onset must be >= 0");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw ConfigError("fault duration must be > 0");
    }
    if (!std::isfinite(magnitude)) {
        throw ConfigError("fault magnitude must be finite");
    }
}

double fault_torque(std::span<const FaultEvent> active_faults) noexcept {
    double total = 0.0;
    for (const auto& f : active_faults) {
        if (f.kind == FaultKind::bias_torque) total += f.magnitude;
    }
    return total;
}

double effective_friction(const PlantParameters& params,
                          std::span<const FaultEvent> active_faults) noexcept {
    const bool overheating = std::any_of(active_faults.begin(), active_faults.end(), [](const auto& f) {
        return f.kind == FaultKind::overheat_drift;
    });
    return overheating ? params.friction * kOverheatFrictionFactor : params.friction;
}

double sensor_offset(std::span<const FaultEvent> active_faults) noexcept {
    double total = 0.0;
    for (const auto& f : active_faults) {
        if (f.kind == FaultKind::sensor_offset) total += f.magnitude;
    }
    return total;
}

JointState step(const PlantParameters& params, const JointState& state, double tau,
                std::span<const FaultEvent> active_faults) {
    if (!std::isfinite(tau)) {
        throw NumericError("non-finite torque applied to plant");
    }
    const double b = effective_friction(params, active_faults);
    const double accel = (tau + fault_torque(active_faults) - b * state.q_dot) / params.inertia;
    JointState next;
    next.q_dot = state.q_dot + params.dt * accel;
    next.q = state.q + params.dt * next.q_dot;
    if (!std::isfinite(next.q) || !std::isfinite(next.q_dot)) {
        throw DivergenceError(fmt::format("plant diverged (q={}, q_dot={})", next.q, next.q_dot));
    }
    return next;
}

void ThermalModel::advance(double tau, double dt, std::span<const FaultEvent> active_faults) {
    double drift = 0.0;
    for (const auto& f : active_faults) {
        if (f.kind == FaultKind::overheat_drift) drift += f.magnitude;
    }
    const double rate = heating * tau * tau - (temperature - ambient) / time_constant + drift;
    temperature += dt * rate;
}

EnergyAccount accumulate_energy(const EnergyAccount& acct, double tau, double q_dot,
                                double tracking_contribution, double dt) {
    if (!(dt > 0.0)) {
        throw NumericError(fmt::format("energy step must be positive, got {}", dt));
    }
    const double power = std::abs(tau * q_dot);
    if (!std::isfinite(power) || !std::isfinite(tracking_contribution)) {
        throw NumericError("non-finite power sample");
    }
    EnergyAccount next = acct;
    const double left = acct.has_sample ? acct.last_power : power;
    const double step_input = 0.5 * (left + power) * dt;
    next.input_work += step_input;
    next.output_work += std::clamp(tracking_contribution, 0.0, step_input);
    next.elapsed += dt;
    next.last_power = power;
    next.has_sample = true;
    return next;
}

double efficiency(const EnergyAccount& acct) {
    if (!(acct.input_work > 0.0)) {
        throw EfficiencyError("efficiency undefined: no input work recorded");
    }
    return std::clamp(acct.output_work * 100.0 / acct.input_work, 0.0, 100.0);
}

} // namespace loopforge
