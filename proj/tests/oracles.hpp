#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "loopforge/learning.hpp"
#include "loopforge/network.hpp"

namespace loopforge::test {

inline double loss_at(const NetworkParameters& p, const std::vector<double>& x, std::size_t action,
                      double target) {
    const double z = forward(p, x).logits()[action];
    return 0.5 * (z - target) * (z - target);
}

// Central differences over every weight and bias.
inline GradientSet numeric_gradient(NetworkParameters p, const std::vector<double>& x, std::size_t action,
                                    double target, double h) {
    GradientSet g;
    const auto probe = [&](double& slot) {
        const double keep = slot;
        slot = keep + h;
        const double up = loss_at(p, x, action, target);
        slot = keep - h;
        const double down = loss_at(p, x, action, target);
        slot = keep;
        return (up - down) / (2 * h);
    };
    for (auto& layer : p.layers) {
        DenseLayer gl{Matrix(layer.weights.rows(), layer.weights.cols()), std::vector<double>(layer.bias.size())};
        auto w = layer.weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) gl.weights.data()[i] = probe(w[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i) gl.bias[i] = probe(layer.bias[i]);
        g.push_back(std::move(gl));
    }
    return g;
}

// Finite differences are meaningless across a ReLU kink.
inline bool near_kink(const ForwardTrace& trace, double margin = 1e-3) {
    for (std::size_t l = 0; l + 1 < trace.pre_activations.size(); ++l)
        for (double z : trace.pre_activations[l])
            if (std::abs(z) < margin) return true;
    return false;
}

struct GradientComparison {
    std::size_t entries = 0;
    std::size_t failures = 0;
    double worst = 0.0;
};

inline void compare_gradients(const GradientSet& analytic, const GradientSet& numeric, double rel, double floor,
                              GradientComparison& acc) {
    const auto check = [&](double a, double n) {
        const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
        acc.worst = std::max(acc.worst, err);
        ++acc.entries;
        if (err > rel) ++acc.failures;
    };
    for (std::size_t l = 0; l < analytic.size(); ++l) {
        const auto a = analytic[l].weights.data();
        const auto n = numeric[l].weights.data();
        for (std::size_t i = 0; i < a.size(); ++i) check(a[i], n[i]);
        for (std::size_t i = 0; i < analytic[l].bias.size(); ++i) check(analytic[l].bias[i], numeric[l].bias[i]);
    }
}

} // namespace loopforge::test
