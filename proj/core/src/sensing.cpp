#include "loopforge/sensing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "loopforge/errors.hpp"

namespace loopforge {

SensorFrame sample_sensors(const JointState& state, const PlantReadout& aux, double time,
                           std::span<const double> noise_std, std::mt19937_64& rng) {
    if (noise_std.size() != kChannelCount) {
        throw ShapeError(fmt::format("sensor noise has {} entries, expected {}", noise_std.size(),
                                     kChannelCount));
    }
    if (!std::isfinite(state.q) || !std::isfinite(state.q_dot) || !std::isfinite(aux.torque) ||
        !std::isfinite(aux.temperature) || !std::isfinite(aux.vibration)) {
        throw DivergenceError(fmt::format("non-finite plant state at t={}", time));
    }

    SensorFrame frame;
    frame.time = time;
    frame.channels.resize(kChannelCount);
    const double measured_q = state.q + aux.position_offset;
    frame.channels[index(Channel::position)] = measured_q;
    frame.channels[index(Channel::velocity)] = state.q_dot;
    frame.channels[index(Channel::torque)] = aux.torque;
    frame.channels[index(Channel::temperature)] = aux.temperature;
    frame.channels[index(Channel::vibration)] = aux.vibration;
    frame.channels[index(Channel::tracking_error)] = aux.setpoint - measured_q;

    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < kChannelCount; ++i) {
        if (noise_std[i] < 0.0) {
            throw ConfigError(fmt::format("negative noise std-dev on channel {}", i));
        }
        const double z = unit(rng);
        frame.channels[i] += noise_std[i] * z;
    }
    // The error channel sees the same position noise the position channel does.
    frame.channels[index(Channel::tracking_error)] =
        aux.setpoint - frame.channels[index(Channel::position)];
    return frame;
}

ChannelCalibration calibrate(std::span<const SensorFrame> frames) {
    if (frames.empty()) {
        throw CalibrationError("calibration window is empty");
    }
    const std::size_t n = frames.front().channels.size();
    ChannelCalibration calib(n);
    for (std::size_t c = 0; c < n; ++c) {
        calib[c].min = frames.front().channels[c];
        calib[c].max = frames.front().channels[c];
    }
    for (const auto& frame : frames) {
        if (frame.channels.size() != n) {
            throw ShapeError("calibration frames differ in channel count");
        }
        for (std::size_t c = 0; c < n; ++c) {
            const double x = frame.channels[c];
            if (!std::isfinite(x)) {
                throw CalibrationError(fmt::format("non-finite reading on channel {}", c));
            }
            calib[c].min = std::min(calib[c].min, x);
            calib[c].max = std::max(calib[c].max, x);
        }
    }
    for (auto& range : calib) {
        range.degenerate = (range.max - range.min) < kDegenerateRange;
    }
    return calib;
}

NormalizedFrame normalize(const SensorFrame& frame, const ChannelCalibration& calib) {
    if (frame.channels.size() != calib.size()) {
        throw ShapeError(fmt::format("frame has {} channels, calibration has {}",
                                     frame.channels.size(), calib.size()));
    }
    NormalizedFrame out;
    out.time = frame.time;
    out.values.resize(calib.size());
    for (std::size_t c = 0; c < calib.size(); ++c) {
        const auto& range = calib[c];
        if (range.degenerate) {
            out.values[c] = 0.0;
            continue;
        }
        const double x = frame.channels[c];
        if (x <= range.min) {
            out.values[c] = 0.0;
        } else if (x >= range.max) {
            out.values[c] = 1.0;
        } else {
            out.values[c] = std::clamp((x - range.min) / (range.max - range.min), 0.0, 1.0);
        }
    }
    return out;
}

} // namespace loopforge
