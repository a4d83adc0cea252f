#include "loopforge/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "loopforge/errors.hpp"

namespace loopforge {

void TrainingConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError(fmt::format("gamma must lie in [0, 1], got {}", gamma), "/training/gamma");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError(fmt::format("alpha must be positive, got {}", alpha), "/training/alpha");
    }
}

void RewardWeights::validate() const {
    if (!(error >= 0.0) || !(energy >= 0.0) || !(fault >= 0.0)) {
        throw ConfigError("reward weights must be non-negative", "/training/reward");
    }
}

double step_reward(double tracking_error, double energy_increment, bool fault_unrecovered,
                   const RewardWeights& weights) {
    return -(weights.error * tracking_error * tracking_error + weights.energy * energy_increment +
             weights.fault * (fault_unrecovered ? 1.0 : 0.0));
}

std::vector<double> discounted_return(std::span<const double> rewards, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError(fmt::format("gamma must lie in [0, 1], got {}", gamma));
    }
    std::vector<double> returns(rewards.size());
    double next = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        next = rewards[i] + gamma * next;
        returns[i] = next;
    }
    return returns;
}

std::vector<double> discounted_return(std::span<const Transition> transitions, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError(fmt::format("gamma must lie in [0, 1], got {}", gamma));
    }
    std::vector<double> returns(transitions.size());
    double next = 0.0;
    for (std::size_t i = transitions.size(); i-- > 0;) {
        if (transitions[i].terminal) next = 0.0;
        next = transitions[i].reward + gamma * next;
        returns[i] = next;
    }
    return returns;
}

double mse_loss(double y_pred, double y_true) noexcept {
    const double r = y_pred - y_true;
    return 0.5 * r * r;
}

GradientSet backward(const NetworkParameters& params, std::span<const double> features,
                     std::size_t action, double target_return, const ForwardTrace& trace) {
    const std::size_t depth = params.layers.size();
    if (depth == 0 || trace.pre_activations.size() != depth ||
        trace.activations.size() != depth + 1) {
        throw ShapeError("forward trace does not match the network depth");
    }
    if (features.size() != params.input_size() || trace.activations.front().size() != features.size()) {
        throw ShapeError("features do not match the network input");
    }
    if (action >= params.output_size()) {
        throw ShapeError(fmt::format("action {} outside {} outputs", action, params.output_size()));
    }

    GradientSet grads;
    grads.reserve(depth);
    for (const auto& layer : params.layers) {
        grads.push_back({Matrix(layer.weights.rows(), layer.weights.cols()),
                         std::vector<double>(layer.bias.size(), 0.0)});
    }

    // dL/dz for the current layer. Only the taken action's logit carries loss.
    std::vector<double> delta(params.output_size(), 0.0);
    delta[action] = trace.logits()[action] - target_return;

    for (std::size_t l = depth; l-- > 0;) {
        const auto& layer = params.layers[l];
        const auto& input = trace.activations[l];
        auto& g = grads[l];
        for (std::size_t r = 0; r < delta.size(); ++r) {
            g.bias[r] = delta[r];
            if (delta[r] == 0.0) continue;
            for (std::size_t c = 0; c < input.size(); ++c) g.weights(r, c) = delta[r] * input[c];
        }
        if (l == 0) break;
        const auto& below = trace.pre_activations[l - 1];
        std::vector<double> next(input.size(), 0.0);
        for (std::size_t c = 0; c < input.size(); ++c) {
            if (below[c] <= 0.0) continue;
            double acc = 0.0;
            for (std::size_t r = 0; r < delta.size(); ++r) acc += layer.weights(r, c) * delta[r];
            next[c] = acc;
        }
        delta = std::move(next);
    }
    return grads;
}

NetworkParameters sgd_step(const NetworkParameters& params, const GradientSet& grads, double alpha) {
    if (!(alpha > 0.0)) {
        throw ConfigError(fmt::format("alpha must be positive, got {}", alpha));
    }
    if (grads.size() != params.layers.size()) {
        throw ShapeError("gradient set depth does not match parameters");
    }
    NetworkParameters out = params;
    for (std::size_t l = 0; l < grads.size(); ++l) {
        auto& layer = out.layers[l];
        const auto& g = grads[l];
        if (g.weights.rows() != layer.weights.rows() || g.weights.cols() != layer.weights.cols() ||
            g.bias.size() != layer.bias.size()) {
            throw ShapeError(fmt::format("gradient shape mismatch in layer {}", l));
        }
        auto w = layer.weights.data();
        auto gw = g.weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= alpha * gw[i];
        for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= alpha * g.bias[i];
    }
    return out;
}

namespace {

// In-place variant used by the training loop.
void apply_gradients(NetworkParameters& params, const GradientSet& grads, double alpha) {
    for (std::size_t l = 0; l < grads.size(); ++l) {
        auto w = params.layers[l].weights.data();
        auto gw = grads[l].weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= alpha * gw[i];
        auto& b = params.layers[l].bias;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= alpha * grads[l].bias[i];
    }
}

} // namespace

NetworkParameters train_policy(const NetworkParameters& params,
                               std::span<const std::vector<Transition>> episodes,
                               const TrainingConfig& config) {
    config.validate();
    params.validate();

    struct Sample {
        const Transition* transition;
        double target;
    };
    std::vector<Sample> samples;
    for (const auto& episode : episodes) {
        const auto returns = discounted_return(std::span<const Transition>(episode), config.gamma);
        for (std::size_t i = 0; i < episode.size(); ++i) {
            const auto& t = episode[i];
            if (t.action >= params.output_size()) {
                throw TrainingError(fmt::format("transition action {} outside {} outputs", t.action,
                                                params.output_size()));
            }
            if (!std::isfinite(t.reward)) {
                throw TrainingError("transition reward is not finite");
            }
            samples.push_back({&t, returns[i]});
        }
    }

    NetworkParameters current = params;
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const auto& s = samples[order[pos]];
            const auto& features = s.transition->features;
            const auto trace = forward(current, features);
            const double loss = mse_loss(trace.logits()[s.transition->action], s.target);
            if (!std::isfinite(loss)) {
                throw TrainingError(fmt::format(
                    "training diverged at epoch {}, step {}: loss={} target={} action={}", epoch, pos,
                    loss, s.target, s.transition->action));
            }
            const auto grads = backward(current, features, s.transition->action, s.target, trace);
            apply_gradients(current, grads, config.alpha);
        }
    }
    try {
        current.validate();
    } catch (const NumericError& e) {
        throw TrainingError(fmt::format("training produced invalid parameters: {}", e.what()));
    }
    return current;
}

std::size_t epsilon_greedy(const ClassDistribution& dist, double epsilon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, dist.probs.size() - 1);
    const double u = coin(rng);
    const std::size_t random_action = pick(rng);
    return u < epsilon ? random_action : classify(dist);
}

namespace {

double loss_at(const NetworkParameters& params, std::span<const double> x, std::size_t action,
               double target) {
    return mse_loss(forward(params, x).logits()[action], target);
}

bool near_relu_kink(const ForwardTrace& trace, double margin) {
    for (std::size_t l = 0; l + 1 < trace.pre_activations.size(); ++l) {
        for (double z : trace.pre_activations[l]) {
            if (std::abs(z) < margin) return true;
        }
    }
    return false;
}

} // namespace

GradientCheckResult gradient_check(const GradientCheckOptions& options) {
    GradientCheckResult result;
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> in_dim(1, options.max_input);
    std::uniform_int_distribution<std::size_t> hid_dim(1, options.max_hidden);
    std::uniform_int_distribution<std::size_t> out_dim(1, options.max_output);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> target_dist(-2.0, 2.0);

    while (result.configurations < options.configurations) {
        const std::vector<std::size_t> sizes{in_dim(rng), hid_dim(rng), out_dim(rng)};
        NetworkParameters params = init_params(sizes, rng());
        for (auto& layer : params.layers) {
            for (double& b : layer.bias) b = target_dist(rng) * 0.1;
        }
        std::vector<double> x(sizes[0]);
        for (double& v : x) v = unit(rng);
        const std::size_t action = std::uniform_int_distribution<std::size_t>(0, sizes[2] - 1)(rng);
        const double target = target_dist(rng);

        const auto trace = forward(params, x);
        // Finite differences are meaningless across a ReLU kink.
        if (near_relu_kink(trace, 1e-3)) continue;
        ++result.configurations;

        const auto grads = backward(params, x, action, target, trace);
        auto check = [&](double analytic, double& slot) {
            const double saved = slot;
            slot = saved + options.step;
            const double up = loss_at(params, x, action, target);
            slot = saved - options.step;
            const double down = loss_at(params, x, action, target);
            slot = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double scale = std::max({std::abs(analytic), std::abs(numeric), options.absolute_floor});
            const double rel = std::abs(analytic - numeric) / scale;
            result.worst_relative_error = std::max(result.worst_relative_error, rel);
            ++result.entries_checked;
            if (rel > options.relative_tolerance) ++result.failures;
        };
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            auto w = params.layers[l].weights.data();
            auto gw = grads[l].weights.data();
            for (std::size_t i = 0; i < w.size(); ++i) check(gw[i], w[i]);
            auto& b = params.layers[l].bias;
            for (std::size_t i = 0; i < b.size(); ++i) check(grads[l].bias[i], b[i]);
        }
    }
    return result;
}

} // namespace loopforge
