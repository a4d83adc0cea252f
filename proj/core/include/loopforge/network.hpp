#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loopforge {

// Dense row-major matrix, rows x cols.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct DenseLayer {
    Matrix weights; // (this layer size) x (previous layer size)
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// The first layer plays the role of the affine feature transform; every
// following layer is the ReLU decision stage. The last layer emits raw logits.
struct NetworkParameters {
    std::vector<std::size_t> layer_sizes;
    std::vector<DenseLayer> layers;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }

    // Shapes consistent with layer_sizes and all entries finite.
    void validate() const;

    friend bool operator==(const NetworkParameters&, const NetworkParameters&) = default;
};

inline constexpr int kNetworkFormatVersion = 1;

// Weights ~ U[-0.5, 0.5] / sqrt(fan_in), biases zero.
NetworkParameters init_params(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

struct ForwardTrace {
    // pre_activations[l] = W(l) a(l-1) + b(l) for l = 0..L-1.
    std::vector<std::vector<double>> pre_activations;
    // activations[0] is the input; activations[l+1] follows layer l.
    // The final entry equals the logits (no ReLU on the output layer).
    std::vector<std::vector<double>> activations;

    const std::vector<double>& logits() const { return pre_activations.back(); }
};

ForwardTrace forward(const NetworkParameters& params, std::span<const double> input);

struct ClassDistribution {
    std::vector<double> probs;
};

// Max-subtracted softmax.
ClassDistribution softmax(std::span<const double> logits);

// Argmax, lowest index wins ties.
std::size_t classify(const ClassDistribution& dist);
std::size_t argmax(std::span<const double> values);

// `seed` is recorded as metadata when given; readers ignore it.
std::string to_json_string(const NetworkParameters& params,
                           std::optional<std::uint64_t> seed = std::nullopt);
NetworkParameters network_from_json_string(const std::string& text);

} // namespace loopforge
