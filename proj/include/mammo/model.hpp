#pragma once

// Small dense classifier: flatten -> [dense -> tanh]* -> dense -> softmax,
// with exact reverse-mode gradients and plain SGD with weight decay.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mammo/matrix.hpp"

namespace mammo {

struct ClassifierConfig {
    int inputHeight = 224;
    int inputWidth = 224;
    std::vector<int> hiddenSizes{16};
    int numClasses = 2;
    double initScale = 1.0;
    std::uint64_t seed = 0;

    int inputSize() const { return inputHeight * inputWidth; }
    /// Identifier binding parameter files to this architecture, e.g. "mlp-8x8-h4-c2".
    std::string architectureTag() const;
    /// Throws ConfigError when the configuration cannot describe a network.
    void validate() const;
};

/// One affine layer. `weight` is fanIn x fanOut.
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ModelParams {
    std::vector<DenseLayer> layers;
    std::string architectureTag;

    std::size_t inputSize() const { return layers.empty() ? 0 : layers.front().weight.rows; }
    std::size_t numClasses() const { return layers.empty() ? 0 : layers.back().weight.cols; }
    std::size_t parameterCount() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Same layout as ModelParams; holds dLoss/dParam.
struct ParamGrads {
    std::vector<DenseLayer> layers;

    double norm() const;
};

/// Cached activations of one forward pass.
/// preActivations[l] is the affine output of layer l; activations[l] is
/// tanh(preActivations[l]) for hidden layers. probs is the softmax of the last
/// pre-activation.
struct ForwardTrace {
    std::vector<Matrix> preActivations;
    std::vector<Matrix> activations;
    Matrix probs;
};

struct OptimState {
    double learningRate = 0.00002;
    double weightDecay = 0.001;
    std::uint64_t step = 0;

    void validate() const;
};

/// Per-class loss weights.
struct ClassWeights {
    std::vector<double> perClass;

    static ClassWeights uniform(std::size_t numClasses) { return {std::vector<double>(numClasses, 1.0)}; }
    void validate() const;
};

inline constexpr double kLogClamp = 1e-12;

ModelParams initModel(const ClassifierConfig& config);

/// `inputs` is batch x inputSize (one flattened image per row).
ForwardTrace forward(const ModelParams& params, const Matrix& inputs);

/// Last hidden activation (n x lastHiddenSize).
Matrix extractPenultimate(const ModelParams& params, const Matrix& inputs);

// Loss functions. All return the batch mean.

/// mean_i -w[y_i] * log(max(p[i][y_i], 1e-12))
double weightedCrossEntropy(const Matrix& probs, std::span<const int> targets, const ClassWeights& weights);
/// mean_i -sum_c w[c] * y[i][c] * log(max(p[i][c], 1e-12))
double softCrossEntropy(const Matrix& probs, const Matrix& targets, const ClassWeights& weights);
/// mean_i ||p_i - y_i||^2
double euclideanLoss(const Matrix& probs, const Matrix& pseudoTargets);

struct WeightedCrossEntropyLoss {
    std::vector<int> targets;
    ClassWeights weights;
};
struct SoftCrossEntropyLoss {
    Matrix targets;
    ClassWeights weights;
};
/// rowWeights empty means every row weighs 1.
struct EuclideanLoss {
    Matrix targets;
    std::vector<double> rowWeights;
};

using LossSpec = std::variant<WeightedCrossEntropyLoss, SoftCrossEntropyLoss, EuclideanLoss>;

struct LossGradient {
    double value = 0.0;
    Matrix probGrad;  ///< dLoss/dProbs, same shape as probs.
};

LossGradient lossGradient(const LossSpec& loss, const Matrix& probs);

/// Backpropagates dLoss/dProbs through softmax and every layer.
ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& inputs,
                    const Matrix& probGrad);
ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& inputs,
                    const LossSpec& loss);

/// w <- w - lr * (g + weightDecay * w); increments optim.step.
ModelParams sgdStep(const ModelParams& params, const ParamGrads& grads, OptimState& optim);

/// Worst relative error between backward() and central differences over every parameter.
/// Relative error is |a - n| / max(|a|, |n|, 1e-4).
double gradientCheck(const ModelParams& params, const Matrix& inputs, const LossSpec& loss, double eps = 1e-4);
/// Builds the model from `config` and checks uniform-weight cross-entropy on `labels`.
double gradientCheck(const ClassifierConfig& config, const Matrix& inputs, std::span<const int> labels);

/// Loss value of `params` on `inputs` (forward + loss only).
double evaluateLoss(const ModelParams& params, const Matrix& inputs, const LossSpec& loss);

// Parameter files.
//
// Binary layout (little-endian):
//   char[4]  magic "MMLP"
//   u32      version (1)
//   u32      tag length, then tag bytes (UTF-8, no terminator)
//   u32      layer count
//   per layer: u32 rows, u32 cols, f64[rows*cols] weight (row-major), f64[cols] bias

std::string serializeBinary(const ModelParams& params);
ModelParams deserializeBinary(std::string_view bytes);
std::string serializeJson(const ModelParams& params);
ModelParams deserializeJson(std::string_view text);

/// Format picked from the extension: ".json" -> JSON, anything else -> binary.
void saveParams(const ModelParams& params, const std::filesystem::path& path);
ModelParams loadParams(const std::filesystem::path& path);

}  // namespace mammo
