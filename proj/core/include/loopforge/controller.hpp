#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace loopforge {

struct JointState {
    double q = 0.0;     // rad
    double q_dot = 0.0; // rad/s
};

struct Setpoint {
    double q_d = 0.0;
    double q_dot_d = 0.0;
};

struct PDGains {
    double kp = 0.0; // N*m/rad
    double kd = 0.0; // N*m*s/rad
};

struct TorqueCommand {
    double tau = 0.0;
    bool saturated = false;
};

inline constexpr double kDefaultTauMax = 10.0;

// tau = kp*(q_d - q) + kd*(q_dot_d - q_dot), clamped to [-tau_max, tau_max].
TorqueCommand pd_torque(const PDGains& gains, const Setpoint& sp, const JointState& state,
                        double tau_max = kDefaultTauMax);

// One discrete control action. Gain scales multiply the current gains; the
// setpoint offset is added to the current setpoint adjustment. `reset` restores
// the nominal gains and re-centers the setpoint before anything else applies.
struct ActionEntry {
    std::string name;
    double kp_scale = 1.0;
    double kd_scale = 1.0;
    double setpoint_offset = 0.0;
    bool reset = false;
};

struct ActionTable {
    std::vector<ActionEntry> entries;
    PDGains nominal{};
    // Gains are kept within nominal * [min_scale, max_scale].
    double min_scale = 0.25;
    double max_scale = 4.0;

    std::size_t size() const noexcept { return entries.size(); }

    // hold, stiffen (kp x1.5), damp (kd x1.5), recover (re-center + gain reset).
    static ActionTable standard(const PDGains& nominal);

    // Throws ConfigError when entry 0 is not a no-op or scales are invalid.
    void validate() const;
};

// `adjustment` is the offset the controller adds to the task setpoint.
// Entry 0 returns its inputs unchanged.
std::pair<PDGains, Setpoint> apply_action(std::size_t action, const ActionTable& table,
                                          const PDGains& gains, const Setpoint& adjustment);

} // namespace loopforge
