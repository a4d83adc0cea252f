#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "loopforge/network.hpp"

namespace loopforge {

struct Transition {
    std::vector<double> features;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_features;
    bool terminal = false;
};

struct TrainingConfig {
    double gamma = 0.9;
    double alpha = 0.01;
    std::size_t epochs = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RewardWeights {
    double error = 1.0;
    double energy = 0.1;
    double fault = 0.5;

    void validate() const;
};

// r = -(w_e*error^2 + w_p*energy + w_f*[fault unrecovered]).
double step_reward(double tracking_error, double energy_increment, bool fault_unrecovered,
                   const RewardWeights& weights = {});

// G_t = r_t + gamma*G_{t+1}, with G = 0 past the end.
std::vector<double> discounted_return(std::span<const double> rewards, double gamma);

// Per-transition returns; each terminal transition closes a segment.
std::vector<double> discounted_return(std::span<const Transition> transitions, double gamma);

double mse_loss(double y_pred, double y_true) noexcept;

using GradientSet = std::vector<DenseLayer>;

// Exact gradient of 0.5*(z_action - target)^2 with respect to every weight and
// bias. ReLU derivative at exactly zero is taken as zero.
GradientSet backward(const NetworkParameters& params, std::span<const double> features,
                     std::size_t action, double target_return, const ForwardTrace& trace);

NetworkParameters sgd_step(const NetworkParameters& params, const GradientSet& grads,
                           double alpha);

// Regresses the taken action's logit toward its discounted return, one
// transition at a time, visiting transitions in a seed-fixed shuffled order.
NetworkParameters train_policy(const NetworkParameters& params,
                               std::span<const std::vector<Transition>> episodes,
                               const TrainingConfig& config);

// Uniform random action with probability epsilon, classify otherwise. Always
// consumes two draws so the stream does not depend on epsilon.
std::size_t epsilon_greedy(const ClassDistribution& dist, double epsilon, std::mt19937_64& rng);

struct GradientCheckResult {
    std::size_t configurations = 0;
    std::size_t entries_checked = 0;
    std::size_t failures = 0;
    double worst_relative_error = 0.0;

    bool passed() const noexcept { return failures == 0; }
};

struct GradientCheckOptions {
    std::size_t configurations = 100;
    std::size_t max_input = 8;
    std::size_t max_hidden = 16;
    std::size_t max_output = 4;
    double step = 1e-5;
    double relative_tolerance = 1e-4;
    double absolute_floor = 1e-2;
    std::uint64_t seed = 1;
};

// Central finite differences against backward() on random networks.
GradientCheckResult gradient_check(const GradientCheckOptions& options = {});

} // namespace loopforge
