#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "loopforge/controller.hpp"

namespace loopforge {

struct PlantParameters {
    double inertia = 1.0;  // kg*m^2
    double friction = 0.1; // N*m*s/rad, viscous
    double dt = 1e-3;      // s

    void validate() const;
};

enum class FaultKind { bias_torque, sensor_offset, overheat_drift };

std::string_view to_string(FaultKind kind) noexcept;
FaultKind parse_fault_kind(std::string_view text);

struct FaultEvent {
    double onset = 0.0;
    double duration = 0.0;
    FaultKind kind = FaultKind::bias_torque;
    // bias_torque: N*m; sensor_offset: rad; overheat_drift: degC/s ramp.
    double magnitude = 0.0;

    bool active_at(double t) const noexcept { return t >= onset && t < onset + duration; }
    void validate() const;
};

// Friction multiplier applied while an overheat-drift fault is active.
inline constexpr double kOverheatFrictionFactor = 1.5;

// One semi-implicit Euler step of I*qdd = tau + tau_fault - b*qd.
// Velocity is updated first and the new velocity advances the position.
JointState step(const PlantParameters& params, const JointState& state, double tau,
                std::span<const FaultEvent> active_faults);

// Sum of bias-torque fault magnitudes and effective friction for the active set.
double fault_torque(std::span<const FaultEvent> active_faults) noexcept;
double effective_friction(const PlantParameters& params,
                          std::span<const FaultEvent> active_faults) noexcept;
double sensor_offset(std::span<const FaultEvent> active_faults) noexcept;

// First-order winding temperature: heats with tau^2, relaxes toward ambient,
// ramps while overheat-drift faults are active.
struct ThermalModel {
    double ambient = 25.0;
    double temperature = 25.0;
    double heating = 0.05;   // degC/s per (N*m)^2
    double time_constant = 30.0;

    void advance(double tau, double dt, std::span<const FaultEvent> active_faults);
};

struct EnergyAccount {
    double input_work = 0.0;  // J, integral of |tau * q_dot|
    double output_work = 0.0; // J, useful tracking work
    double elapsed = 0.0;     // s
    double last_power = 0.0;  // |tau*q_dot| at the previous sample
    bool has_sample = false;
};

// Trapezoid accumulation of |tau*q_dot|. The first call has no left endpoint and
// uses the current sample for both ends. `tracking_contribution` is the drop in
// tracking-error potential over the step, clipped per step to
// [0, input work of that step].
EnergyAccount accumulate_energy(const EnergyAccount& acct, double tau, double q_dot,
                                double tracking_contribution, double dt);

// Percent in [0, 100]. Throws EfficiencyError when no input work was recorded.
double efficiency(const EnergyAccount& acct);

} // namespace loopforge
