#include "loopforge/controller.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "loopforge/errors.hpp"

namespace loopforge {

TorqueCommand pd_torque(const PDGains& gains, const Setpoint& sp, const JointState& state,
                        double tau_max) {
    if (!(tau_max > 0.0)) {
        throw ConfigError(fmt::format("tau_max must be positive, got {}", tau_max));
    }
    if (!std::isfinite(gains.kp) || !std::isfinite(gains.kd) || !std::isfinite(sp.q_d) ||
        !std::isfinite(sp.q_dot_d) || !std::isfinite(state.q) || !std::isfinite(state.q_dot) ||
        !std::isfinite(tau_max)) {
        throw NumericError("non-finite input to PD torque");
    }
    const double raw = gains.kp * (sp.q_d - state.q) + gains.kd * (sp.q_dot_d - state.q_dot);
    TorqueCommand cmd;
    cmd.saturated = std::abs(raw) > tau_max;
    cmd.tau = std::clamp(raw, -tau_max, tau_max);
    return cmd;
}

ActionTable ActionTable::standard(const PDGains& nominal) {
    ActionTable table;
    table.nominal = nominal;
    table.entries = {
        {"hold", 1.0, 1.0, 0.0, false},
        {"stiffen", 1.5, 1.0, 0.0, false},
        {"damp", 1.0, 1.5, 0.0, false},
        {"recover", 1.0, 1.0, 0.0, true},
    };
    return table;
}

void ActionTable::validate() const {
    if (entries.empty()) {
        throw ConfigError("action table is empty", "/controller/actions");
    }
    const auto& first = entries.front();
    if (first.kp_scale != 1.0 || first.kd_scale != 1.0 || first.setpoint_offset != 0.0 ||
        first.reset) {
        throw ConfigError("action 0 must be a no-op", "/controller/actions/0");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!(e.kp_scale > 0.0) || !(e.kd_scale > 0.0) || !std::isfinite(e.kp_scale) ||
            !std::isfinite(e.kd_scale) || !std::isfinite(e.setpoint_offset)) {
            throw ConfigError("gain scales must be positive and finite",
                              fmt::format("/controller/actions/{}", i));
        }
    }
    if (!(min_scale > 0.0) || !(max_scale >= min_scale) || !std::isfinite(max_scale)) {
        throw ConfigError("gain scale limits must satisfy 0 < min <= max",
                          "/controller/gain_scale_limits");
    }
    if (nominal.kp < 0.0 || nominal.kd < 0.0) {
        throw ConfigError("nominal gains must be non-negative", "/controller/gains");
    }
}

std::pair<PDGains, Setpoint> apply_action(std::size_t action, const ActionTable& table,
                                          const PDGains& gains, const Setpoint& adjustment) {
    if (action >= table.size()) {
        throw ActionError(fmt::format("action {} out of range for a table of {}", action,
                                      table.size()));
    }
    if (action == 0) {
        return {gains, adjustment};
    }
    const auto& entry = table.entries[action];
    PDGains out = gains;
    Setpoint adj = adjustment;
    if (entry.reset) {
        out = table.nominal;
        adj = Setpoint{};
    }
    out.kp *= entry.kp_scale;
    out.kd *= entry.kd_scale;
    out.kp = std::clamp(out.kp, table.nominal.kp * table.min_scale, table.nominal.kp * table.max_scale);
    out.kd = std::clamp(out.kd, table.nominal.kd * table.min_scale, table.nominal.kd * table.max_scale);
    adj.q_d += entry.setpoint_offset;
    return {out, adj};
}

} // namespace loopforge
