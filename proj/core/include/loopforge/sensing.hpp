#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "loopforge/controller.hpp"

namespace loopforge {

// Channel layout of a SensorFrame. Position and velocity are what the PD loop
// consumes; the rest are synthetic telemetry for the decision network.
enum class Channel : std::size_t {
    position = 0,     // rad
    velocity = 1,     // rad/s
    torque = 2,       // N*m, last commanded
    temperature = 3,  // degC
    vibration = 4,    // a.u., mean |acceleration| over the last control period
    tracking_error = 5, // rad, setpoint minus measured position
};

inline constexpr std::size_t kChannelCount = 6;

constexpr std::size_t index(Channel c) noexcept { return static_cast<std::size_t>(c); }

struct SensorFrame {
    double time = 0.0;
    std::vector<double> channels;

    double at(Channel c) const { return channels.at(index(c)); }
};

// Plant quantities that are not part of the joint state but show up on sensors.
struct PlantReadout {
    double torque = 0.0;
    double temperature = 25.0;
    double vibration = 0.0;
    double setpoint = 0.0;
    double position_offset = 0.0; // sensor-offset faults
};

struct ChannelRange {
    double min = 0.0;
    double max = 0.0;
    bool degenerate = true;
};

using ChannelCalibration = std::vector<ChannelRange>;

struct NormalizedFrame {
    double time = 0.0;
    std::vector<double> values;
};

inline constexpr double kDegenerateRange = 1e-12;

// Draws one standard normal per channel regardless of the configured std-dev,
// so the generator advances identically for any noise setting.
SensorFrame sample_sensors(const JointState& state, const PlantReadout& aux, double time,
                           std::span<const double> noise_std, std::mt19937_64& rng);

ChannelCalibration calibrate(std::span<const SensorFrame> frames);

// Degenerate channels map to 0; readings outside the calibrated range clamp to [0, 1].
NormalizedFrame normalize(const SensorFrame& frame, const ChannelCalibration& calib);

} // namespace loopforge
