#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "loopforge/errors.hpp"
#include "loopforge/sensing.hpp"

using namespace loopforge;

namespace {

SensorFrame frame_of(double time, std::vector<double> values) { return SensorFrame{time, std::move(values)}; }

const std::vector<double> kNoNoise(kChannelCount, 0.0);

} // namespace

TEST(SampleSensors, ZeroNoiseReportsTruePosition) {
    std::mt19937_64 rng(7);
    const auto frame = sample_sensors({0.5, 0.0}, {}, 0.0, kNoNoise, rng);
    EXPECT_EQ(frame.at(Channel::position), 0.5);
    EXPECT_EQ(frame.channels.size(), kChannelCount);
}

TEST(SampleSensors, SameSeedSameFrames) {
    std::vector<double> noise{0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
    std::mt19937_64 a(99), b(99);
    for (int i = 0; i < 50; ++i) {
        const double t = 0.01 * i;
        EXPECT_EQ(sample_sensors({0.3, -0.1}, {}, t, noise, a).channels,
                  sample_sensors({0.3, -0.1}, {}, t, noise, b).channels);
    }
}

TEST(SampleSensors, NoiseStdMatchesConfiguration) {
    std::vector<double> noise(kChannelCount, 0.0);
    noise[index(Channel::position)] = 0.01;
    std::mt19937_64 rng(2024);
    const int n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_sensors({1.0, 0.0}, {}, i * 0.01, noise, rng).at(Channel::position);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sum_sq - n * mean * mean) / (n - 1));
    EXPECT_GE(sd, 0.008);
    EXPECT_LE(sd, 0.012);
}

TEST(SampleSensors, TrackingErrorFollowsMeasuredPosition) {
    std::mt19937_64 rng(1);
    PlantReadout aux;
    aux.setpoint = 0.75;
    aux.position_offset = 0.05;
    const auto frame = sample_sensors({0.5, 0.0}, aux, 0.0, kNoNoise, rng);
    EXPECT_DOUBLE_EQ(frame.at(Channel::position), 0.55);
    EXPECT_DOUBLE_EQ(frame.at(Channel::tracking_error), 0.2);
}

TEST(SampleSensors, NonFiniteStateIsDivergence) {
    std::mt19937_64 rng(1);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(sample_sensors({nan, 0.0}, {}, 0.0, kNoNoise, rng), DivergenceError);
    EXPECT_THROW(sample_sensors({0.0, INFINITY}, {}, 0.0, kNoNoise, rng), DivergenceError);
}

TEST(SampleSensors, RejectsWrongNoiseLength) {
    std::mt19937_64 rng(1);
    std::vector<double> noise{0.1};
    EXPECT_THROW(sample_sensors({}, {}, 0.0, noise, rng), ShapeError);
}

TEST(Calibrate, ExtremaPerChannel) {
    std::vector<SensorFrame> frames{frame_of(0, {2, 5}), frame_of(1, {4, 5}), frame_of(2, {6, 5})};
    const auto calib = calibrate(frames);
    ASSERT_EQ(calib.size(), 2u);
    EXPECT_EQ(calib[0].min, 2.0);
    EXPECT_EQ(calib[0].max, 6.0);
    EXPECT_FALSE(calib[0].degenerate);
    EXPECT_TRUE(calib[1].degenerate);
}

TEST(Calibrate, SingleFrameIsDegenerate) {
    std::vector<SensorFrame> frames{frame_of(0, {3.5})};
    const auto calib = calibrate(frames);
    EXPECT_EQ(calib[0].min, 3.5);
    EXPECT_EQ(calib[0].max, 3.5);
    EXPECT_TRUE(calib[0].degenerate);
}

TEST(Calibrate, EmptyWindowThrows) {
    std::vector<SensorFrame> frames;
    EXPECT_THROW(calibrate(frames), CalibrationError);
}

TEST(Normalize, EndpointsAndMidpoint) {
    std::vector<SensorFrame> frames{frame_of(0, {2}), frame_of(1, {4}), frame_of(2, {6})};
    const auto calib = calibrate(frames);
    EXPECT_EQ(normalize(frame_of(0, {2}), calib).values[0], 0.0);
    EXPECT_EQ(normalize(frame_of(0, {6}), calib).values[0], 1.0);
    EXPECT_EQ(normalize(frame_of(0, {4}), calib).values[0], 0.5);
}

TEST(Normalize, DegenerateChannelMapsToZero) {
    std::vector<SensorFrame> frames{frame_of(0, {5}), frame_of(1, {5})};
    const auto calib = calibrate(frames);
    for (double x : {-100.0, 5.0, 1e9}) EXPECT_EQ(normalize(frame_of(0, {x}), calib).values[0], 0.0);
}

TEST(Normalize, OutOfRangeClamps) {
    std::vector<SensorFrame> frames{frame_of(0, {0}), frame_of(1, {1})};
    const auto calib = calibrate(frames);
    EXPECT_EQ(normalize(frame_of(0, {-3}), calib).values[0], 0.0);
    EXPECT_EQ(normalize(frame_of(0, {7}), calib).values[0], 1.0);
}

TEST(Normalize, LengthMismatchThrows) {
    std::vector<SensorFrame> frames{frame_of(0, {0, 1}), frame_of(1, {1, 2})};
    const auto calib = calibrate(frames);
    EXPECT_THROW(normalize(frame_of(0, {0.5}), calib), ShapeError);
}

TEST(NormalizeProperty, MonotoneAndBounded) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SensorFrame> window;
        for (int i = 0; i < 20; ++i) window.push_back(frame_of(i, {u(rng)}));
        const auto calib = calibrate(window);
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const double na = normalize(frame_of(0, {a}), calib).values[0];
        const double nb = normalize(frame_of(0, {b}), calib).values[0];
        EXPECT_LE(na, nb);
        EXPECT_GE(na, 0.0);
        EXPECT_LE(nb, 1.0);
    }
}

TEST(NormalizeProperty, CalibrationWindowSpansUnitInterval) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 3.0);
    std::vector<SensorFrame> window;
    for (int i = 0; i < 200; ++i) window.push_back(frame_of(i, {g(rng), g(rng), 1.0}));
    const auto calib = calibrate(window);
    for (std::size_t c = 0; c < 2; ++c) {
        double lo = 1.0, hi = 0.0;
        for (const auto& f : window) {
            const double v = normalize(f, calib).values[c];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        EXPECT_EQ(lo, 0.0);
        EXPECT_EQ(hi, 1.0);
    }
}
