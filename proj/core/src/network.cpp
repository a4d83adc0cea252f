#include "loopforge/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "loopforge/errors.hpp"

namespace loopforge {

void NetworkParameters::validate() const {
    if (layer_sizes.size() < 2) {
        throw ShapeError("network needs at least an input and an output size");
    }
    if (layers.size() + 1 != layer_sizes.size()) {
        throw ShapeError(fmt::format("{} layers for {} sizes", layers.size(), layer_sizes.size()));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.weights.rows() != layer_sizes[l + 1] || layer.weights.cols() != layer_sizes[l] ||
            layer.bias.size() != layer_sizes[l + 1]) {
            throw ShapeError(fmt::format("layer {} shape does not match sizes {}x{}", l,
                                         layer_sizes[l + 1], layer_sizes[l]));
        }
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weights.data().begin(), layer.weights.data().end(), finite) ||
            !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
            throw NumericError(fmt::format("layer {} has non-finite parameters", l));
        }
    }
}

NetworkParameters init_params(std::span<const std::size_t> layer_sizes, std::uint64_t seed) {
    if (layer_sizes.empty()) {
        throw ConfigError("layer size list is empty", "/network");
    }
    if (layer_sizes.size() < 2) {
        throw ConfigError("network needs at least an input and an output size", "/network");
    }
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw ConfigError("layer sizes must be >= 1", "/network");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-0.5, 0.5);
    NetworkParameters params;
    params.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t fan_in = layer_sizes[l];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        DenseLayer layer{Matrix(layer_sizes[l + 1], fan_in), std::vector<double>(layer_sizes[l + 1], 0.0)};
        for (double& w : layer.weights.data()) w = uniform(rng) * scale;
        params.layers.push_back(std::move(layer));
    }
    return params;
}

ForwardTrace forward(const NetworkParameters& params, std::span<const double> input) {
    if (params.layers.empty() || input.size() != params.input_size()) {
        throw ShapeError(fmt::format("input has {} values, network expects {}", input.size(),
                                     params.layers.empty() ? 0 : params.input_size()));
    }
    ForwardTrace trace;
    trace.pre_activations.reserve(params.layers.size());
    trace.activations.reserve(params.layers.size() + 1);
    trace.activations.emplace_back(input.begin(), input.end());

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        const auto& prev = trace.activations.back();
        if (layer.weights.cols() != prev.size()) {
            throw ShapeError(fmt::format("layer {} expects {} inputs, got {}", l,
                                         layer.weights.cols(), prev.size()));
        }
        std::vector<double> z(layer.weights.rows());
        for (std::size_t r = 0; r < z.size(); ++r) {
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < prev.size(); ++c) acc += layer.weights(r, c) * prev[c];
            if (!std::isfinite(acc)) {
                throw NumericError(fmt::format("non-finite pre-activation in layer {}", l));
            }
            z[r] = acc;
        }
        const bool output_layer = l + 1 == params.layers.size();
        std::vector<double> a = z;
        if (!output_layer) {
            for (double& v : a) v = std::max(0.0, v);
        }
        trace.pre_activations.push_back(std::move(z));
        trace.activations.push_back(std::move(a));
    }
    return trace;
}

ClassDistribution softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw ShapeError("softmax of an empty logit vector");
    }
    double peak = logits.front();
    for (double z : logits) {
        if (!std::isfinite(z)) throw NumericError("non-finite logit");
        peak = std::max(peak, z);
    }
    ClassDistribution dist;
    dist.probs.resize(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        dist.probs[k] = std::exp(logits[k] - peak);
        total += dist.probs[k];
    }
    for (double& p : dist.probs) p /= total;
    return dist;
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw ShapeError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return best;
}

std::size_t classify(const ClassDistribution& dist) { return argmax(dist.probs); }

std::string to_json_string(const NetworkParameters& params, std::optional<std::uint64_t> seed) {
    params.validate();
    nlohmann::json doc;
    doc["format_version"] = kNetworkFormatVersion;
    if (seed) doc["seed"] = *seed;
    doc["layer_sizes"] = params.layer_sizes;
    auto layers = nlohmann::json::array();
    for (const auto& layer : params.layers) {
        layers.push_back({{"weights", std::vector<double>(layer.weights.data().begin(),
                                                          layer.weights.data().end())},
                          {"bias", layer.bias}});
    }
    doc["layers"] = std::move(layers);
    return doc.dump(2) + "\n";
}

NetworkParameters network_from_json_string(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("malformed network JSON: {}", e.what()));
    }
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != kNetworkFormatVersion) {
            throw ConfigError(fmt::format("unsupported network format version {}", version),
                              "/format_version");
        }
        NetworkParameters params;
        params.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
        const auto& layers = doc.at("layers");
        if (params.layer_sizes.size() < 2 || layers.size() + 1 != params.layer_sizes.size()) {
            throw ShapeError("layer list does not match layer_sizes");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto flat = layers[l].at("weights").get<std::vector<double>>();
            const std::size_t rows = params.layer_sizes[l + 1];
            const std::size_t cols = params.layer_sizes[l];
            if (flat.size() != rows * cols) {
                throw ShapeError(fmt::format("layer {} has {} weights, expected {}", l, flat.size(),
                                             rows * cols));
            }
            DenseLayer layer{Matrix(rows, cols), layers[l].at("bias").get<std::vector<double>>()};
            std::copy(flat.begin(), flat.end(), layer.weights.data().begin());
            params.layers.push_back(std::move(layer));
        }
        params.validate();
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("invalid network JSON: {}", e.what()));
    }
}

} // namespace loopforge
