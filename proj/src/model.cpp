#include "mammo/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mammo/errors.hpp"
#include "mammo/kernels.hpp"
#include "mammo/rng.hpp"

namespace mammo {

std::string ClassifierConfig::architectureTag() const {
    std::string tag = "mlp-" + std::to_string(inputHeight) + "x" + std::to_string(inputWidth);
    for (int h : hiddenSizes) tag += "-h" + std::to_string(h);
    tag += "-c" + std::to_string(numClasses);
    return tag;
}

void ClassifierConfig::validate() const {
    if (inputHeight <= 0 || inputWidth <= 0) throw ConfigError("classifier input size must be positive");
    if (hiddenSizes.empty()) throw ConfigError("classifier needs at least one hidden layer");
    for (int h : hiddenSizes) {
        if (h <= 0) throw ConfigError("hidden layer sizes must be positive");
    }
    if (numClasses < 2) throw ConfigError("classifier needs at least two classes");
    if (!std::isfinite(initScale) || initScale < 0.0) throw ConfigError("initScale must be finite and >= 0");

    // Parameter count must fit comfortably in memory and in u32 shape fields.
    constexpr double kMaxParams = 1u << 28;
    double count = 0.0;
    double fanIn = static_cast<double>(inputHeight) * inputWidth;
    std::vector<int> widths = hiddenSizes;
    widths.push_back(numClasses);
    for (int w : widths) {
        count += fanIn * w + w;
        fanIn = w;
    }
    if (count > kMaxParams) throw ConfigError("classifier configuration exceeds the parameter limit");
}

std::size_t ModelParams::parameterCount() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
    return n;
}

double ParamGrads::norm() const {
    double s = 0.0;
    for (const auto& l : layers) {
        for (double v : l.weight.data) s += v * v;
        for (double v : l.bias) s += v * v;
    }
    return std::sqrt(s);
}

void OptimState::validate() const {
    if (!(learningRate > 0.0) || !std::isfinite(learningRate)) throw ConfigError("learning rate must be > 0");
    if (!(weightDecay >= 0.0) || !std::isfinite(weightDecay)) throw ConfigError("weight decay must be >= 0");
}

void ClassWeights::validate() const {
    if (perClass.empty()) throw ContractError("class weights are empty");
    for (double w : perClass) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ContractError("class weights must be positive and finite");
    }
}

ModelParams initModel(const ClassifierConfig& config) {
    config.validate();
    ModelParams params;
    params.architectureTag = config.architectureTag();

    Rng rng(config.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<int> widths = config.hiddenSizes;
    widths.push_back(config.numClasses);
    std::size_t fanIn = static_cast<std::size_t>(config.inputSize());
    for (int width : widths) {
        DenseLayer layer{Matrix(fanIn, static_cast<std::size_t>(width)),
                         std::vector<double>(static_cast<std::size_t>(width), 0.0)};
        const double scale = config.initScale / std::sqrt(static_cast<double>(fanIn));
        for (double& w : layer.weight.data) w = unit(rng) * scale;
        params.layers.push_back(std::move(layer));
        fanIn = static_cast<std::size_t>(width);
    }
    return params;
}

namespace {

void checkChain(const ModelParams& params) {
    if (params.layers.empty()) throw ContractError("model has no layers");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        if (layer.bias.size() != layer.weight.cols) throw ContractError("bias size does not match layer width");
        if (l > 0 && params.layers[l - 1].weight.cols != layer.weight.rows) {
            throw ContractError("layer dimensions do not chain");
        }
    }
}

void softmaxRows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        auto z = logits.row(i);
        auto p = probs.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) {
            p[c] = std::exp(z[c] - mx);
            sum += p[c];
        }
        for (double& v : p) v /= sum;
    }
}

double clampedLog(double p) { return std::log(std::max(p, kLogClamp)); }
double clampedLogDerivative(double p) { return p > kLogClamp ? 1.0 / p : 0.0; }

void checkRowsMatch(const Matrix& probs, std::size_t n, const char* what) {
    if (probs.rows == 0) throw ContractError(std::string(what) + ": empty batch");
    if (probs.rows != n) throw ContractError(std::string(what) + ": batch size mismatch");
}

void checkWeights(const ClassWeights& weights, std::size_t numClasses) {
    weights.validate();
    if (weights.perClass.size() != numClasses) throw ContractError("class weight count does not match classes");
}

}  // namespace

ForwardTrace forward(const ModelParams& params, const Matrix& inputs) {
    checkChain(params);
    if (inputs.cols != params.inputSize()) throw ContractError("input width does not match the model");
    ForwardTrace trace;
    const Matrix* current = &inputs;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Matrix z;
        kernels::denseForward(*current, layer.weight, layer.bias, z);
        trace.preActivations.push_back(std::move(z));
        if (l + 1 < params.layers.size()) {
            Matrix a = trace.preActivations.back();
            for (double& v : a.data) v = std::tanh(v);
            trace.activations.push_back(std::move(a));
            current = &trace.activations.back();
        }
    }
    softmaxRows(trace.preActivations.back(), trace.probs);
    return trace;
}

Matrix extractPenultimate(const ModelParams& params, const Matrix& inputs) {
    return forward(params, inputs).activations.back();
}

double weightedCrossEntropy(const Matrix& probs, std::span<const int> targets, const ClassWeights& weights) {
    return lossGradient(WeightedCrossEntropyLoss{{targets.begin(), targets.end()}, weights}, probs).value;
}

double softCrossEntropy(const Matrix& probs, const Matrix& targets, const ClassWeights& weights) {
    return lossGradient(SoftCrossEntropyLoss{targets, weights}, probs).value;
}

double euclideanLoss(const Matrix& probs, const Matrix& pseudoTargets) {
    return lossGradient(EuclideanLoss{pseudoTargets, {}}, probs).value;
}

LossGradient lossGradient(const LossSpec& loss, const Matrix& probs) {
    LossGradient out;
    out.probGrad = Matrix(probs.rows, probs.cols);
    const auto n = static_cast<double>(probs.rows);

    if (const auto* ce = std::get_if<WeightedCrossEntropyLoss>(&loss)) {
        checkRowsMatch(probs, ce->targets.size(), "weightedCrossEntropy");
        checkWeights(ce->weights, probs.cols);
        double sum = 0.0;
        for (std::size_t i = 0; i < probs.rows; ++i) {
            const int y = ce->targets[i];
            if (y < 0 || static_cast<std::size_t>(y) >= probs.cols) throw ContractError("target label out of range");
            const double w = ce->weights.perClass[static_cast<std::size_t>(y)];
            sum += -w * clampedLog(probs(i, y));
            out.probGrad(i, y) = -w * clampedLogDerivative(probs(i, y)) / n;
        }
        out.value = sum / n;
    } else if (const auto* soft = std::get_if<SoftCrossEntropyLoss>(&loss)) {
        checkRowsMatch(probs, soft->targets.rows, "softCrossEntropy");
        if (!soft->targets.sameShape(probs)) throw ContractError("softCrossEntropy: target shape mismatch");
        checkWeights(soft->weights, probs.cols);
        double sum = 0.0;
        for (std::size_t i = 0; i < probs.rows; ++i) {
            for (std::size_t c = 0; c < probs.cols; ++c) {
                const double wy = soft->weights.perClass[c] * soft->targets(i, c);
                if (wy == 0.0) continue;
                sum += -wy * clampedLog(probs(i, c));
                out.probGrad(i, c) = -wy * clampedLogDerivative(probs(i, c)) / n;
            }
        }
        out.value = sum / n;
    } else {
        const auto& eu = std::get<EuclideanLoss>(loss);
        checkRowsMatch(probs, eu.targets.rows, "euclideanLoss");
        if (!eu.targets.sameShape(probs)) throw ContractError("euclideanLoss: shape mismatch");
        if (!eu.rowWeights.empty() && eu.rowWeights.size() != probs.rows) {
            throw ContractError("euclideanLoss: row weight count mismatch");
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < probs.rows; ++i) {
            const double w = eu.rowWeights.empty() ? 1.0 : eu.rowWeights[i];
            double d2 = 0.0;
            for (std::size_t c = 0; c < probs.cols; ++c) {
                const double d = probs(i, c) - eu.targets(i, c);
                d2 += d * d;
                out.probGrad(i, c) = 2.0 * w * d / n;
            }
            sum += w * d2;
        }
        out.value = sum / n;
    }
    return out;
}

ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& inputs,
                    const Matrix& probGrad) {
    checkChain(params);
    const std::size_t depth = params.layers.size();
    if (trace.preActivations.size() != depth || trace.activations.size() + 1 != depth) {
        throw ContractError("forward trace does not belong to these parameters");
    }
    if (!trace.probs.sameShape(probGrad) || inputs.rows != probGrad.rows || inputs.cols != params.inputSize()) {
        throw ContractError("stale forward trace: shapes do not match the batch");
    }
    for (std::size_t l = 0; l < depth; ++l) {
        if (trace.preActivations[l].cols != params.layers[l].weight.cols || trace.preActivations[l].rows != inputs.rows) {
            throw ContractError("stale forward trace: layer shapes do not match");
        }
    }

    // Softmax Jacobian: dz = p * (g - <g, p>).
    Matrix delta(probGrad.rows, probGrad.cols);
    for (std::size_t i = 0; i < probGrad.rows; ++i) {
        auto p = trace.probs.row(i);
        auto g = probGrad.row(i);
        double dot = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) dot += g[c] * p[c];
        for (std::size_t c = 0; c < p.size(); ++c) delta(i, c) = p[c] * (g[c] - dot);
    }

    ParamGrads grads;
    grads.layers.resize(depth);
    for (std::size_t l = depth; l-- > 0;) {
        const Matrix& layerInput = l == 0 ? inputs : trace.activations[l - 1];
        auto& g = grads.layers[l];
        kernels::denseWeightGrad(layerInput, delta, g.weight);
        g.bias.assign(delta.cols, 0.0);
        for (std::size_t i = 0; i < delta.rows; ++i) {
            for (std::size_t j = 0; j < delta.cols; ++j) g.bias[j] += delta(i, j);
        }
        if (l == 0) break;
        Matrix upstream;
        kernels::denseInputGrad(delta, params.layers[l].weight, upstream);
        const Matrix& act = trace.activations[l - 1];
        for (std::size_t k = 0; k < upstream.data.size(); ++k) {
            upstream.data[k] *= 1.0 - act.data[k] * act.data[k];
        }
        delta = std::move(upstream);
    }
    return grads;
}

ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& inputs,
                    const LossSpec& loss) {
    return backward(params, trace, inputs, lossGradient(loss, trace.probs).probGrad);
}

ModelParams sgdStep(const ModelParams& params, const ParamGrads& grads, OptimState& optim) {
    if (grads.layers.size() != params.layers.size()) throw ContractError("gradient layout does not match parameters");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        if (!grads.layers[l].weight.sameShape(params.layers[l].weight) ||
            grads.layers[l].bias.size() != params.layers[l].bias.size()) {
            throw ContractError("gradient shapes do not match parameters");
        }
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(grads.layers[l].weight.data.begin(), grads.layers[l].weight.data.end(), finite) ||
            !std::all_of(grads.layers[l].bias.begin(), grads.layers[l].bias.end(), finite)) {
            throw TrainingError("non-finite gradient at step " + std::to_string(optim.step));
        }
    }
    ModelParams next = params;
    const double lr = optim.learningRate, wd = optim.weightDecay;
    for (std::size_t l = 0; l < next.layers.size(); ++l) {
        auto& w = next.layers[l].weight.data;
        const auto& gw = grads.layers[l].weight.data;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * (gw[k] + wd * w[k]);
        auto& b = next.layers[l].bias;
        const auto& gb = grads.layers[l].bias;
        for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * (gb[k] + wd * b[k]);
    }
    ++optim.step;
    return next;
}

double evaluateLoss(const ModelParams& params, const Matrix& inputs, const LossSpec& loss) {
    return lossGradient(loss, forward(params, inputs).probs).value;
}

double gradientCheck(const ModelParams& params, const Matrix& inputs, const LossSpec& loss, double eps) {
    const ParamGrads analytic = backward(params, forward(params, inputs), inputs, loss);
    ModelParams probe = params;
    double worst = 0.0;
    auto compare = [&](double& slot, double a) {
        const double saved = slot;
        slot = saved + eps;
        const double up = evaluateLoss(probe, inputs, loss);
        slot = saved - eps;
        const double down = evaluateLoss(probe, inputs, loss);
        slot = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        auto& layer = probe.layers[l];
        for (std::size_t k = 0; k < layer.weight.data.size(); ++k) {
            compare(layer.weight.data[k], analytic.layers[l].weight.data[k]);
        }
        for (std::size_t k = 0; k < layer.bias.size(); ++k) compare(layer.bias[k], analytic.layers[l].bias[k]);
    }
    return worst;
}

double gradientCheck(const ClassifierConfig& config, const Matrix& inputs, std::span<const int> labels) {
    const ModelParams params = initModel(config);
    return gradientCheck(params,
                         inputs,
                         WeightedCrossEntropyLoss{{labels.begin(), labels.end()},
                                                  ClassWeights::uniform(static_cast<std::size_t>(config.numClasses))});
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

static_assert(std::endian::native == std::endian::little, "binary parameter files assume a little-endian host");

constexpr char kMagic[4] = {'M', 'M', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

void putU32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void putF64(std::string& out, double v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

struct Reader {
    std::string_view bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (bytes.size() - pos < n) throw DataError("parameter file truncated at byte " + std::to_string(pos));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        double v;
        std::memcpy(&v, bytes.data() + pos, 8);
        pos += 8;
        return v;
    }
};

void validateLoaded(const ModelParams& params) {
    checkChain(params);
    for (const auto& l : params.layers) {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(l.weight.data.begin(), l.weight.data.end(), finite) ||
            !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
            throw DataError("parameter file contains non-finite values");
        }
    }
}

}  // namespace

std::string serializeBinary(const ModelParams& params) {
    std::string out(kMagic, 4);
    putU32(out, kVersion);
    putU32(out, static_cast<std::uint32_t>(params.architectureTag.size()));
    out += params.architectureTag;
    putU32(out, static_cast<std::uint32_t>(params.layers.size()));
    for (const auto& l : params.layers) {
        putU32(out, static_cast<std::uint32_t>(l.weight.rows));
        putU32(out, static_cast<std::uint32_t>(l.weight.cols));
        for (double v : l.weight.data) putF64(out, v);
        for (double v : l.bias) putF64(out, v);
    }
    return out;
}

ModelParams deserializeBinary(std::string_view bytes) {
    Reader r{bytes};
    r.need(4);
    if (bytes.substr(0, 4) != std::string_view(kMagic, 4)) throw DataError("not a parameter file (bad magic)");
    r.pos = 4;
    if (const auto v = r.u32(); v != kVersion) {
        throw DataError("unsupported parameter file version " + std::to_string(v));
    }
    const auto tagLen = r.u32();
    r.need(tagLen);
    ModelParams params;
    params.architectureTag = std::string(bytes.substr(r.pos, tagLen));
    r.pos += tagLen;
    const auto layerCount = r.u32();
    for (std::uint32_t l = 0; l < layerCount; ++l) {
        const auto rows = r.u32();
        const auto cols = r.u32();
        r.need((static_cast<std::size_t>(rows) * cols + cols) * 8);
        DenseLayer layer{Matrix(rows, cols), std::vector<double>(cols)};
        for (double& v : layer.weight.data) v = r.f64();
        for (double& v : layer.bias) v = r.f64();
        params.layers.push_back(std::move(layer));
    }
    if (r.pos != bytes.size()) throw DataError("trailing bytes after parameter data");
    validateLoaded(params);
    return params;
}

std::string serializeJson(const ModelParams& params) {
    nlohmann::json j;
    j["format"] = "mammo-params";
    j["version"] = kVersion;
    j["architecture_tag"] = params.architectureTag;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : params.layers) {
        j["layers"].push_back({{"rows", l.weight.rows}, {"cols", l.weight.cols}, {"weight", l.weight.data},
                               {"bias", l.bias}});
    }
    return j.dump(1) + "\n";
}

ModelParams deserializeJson(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("parameter JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "mammo-params") throw DataError("parameter JSON: unexpected format tag");
        if (j.at("version").get<std::uint32_t>() != kVersion) throw DataError("parameter JSON: unsupported version");
        ModelParams params;
        params.architectureTag = j.at("architecture_tag").get<std::string>();
        for (const auto& jl : j.at("layers")) {
            const auto rows = jl.at("rows").get<std::size_t>();
            const auto cols = jl.at("cols").get<std::size_t>();
            DenseLayer layer{Matrix(rows, cols), jl.at("bias").get<std::vector<double>>()};
            layer.weight.data = jl.at("weight").get<std::vector<double>>();
            if (layer.weight.data.size() != rows * cols) throw DataError("parameter JSON: weight size mismatch");
            params.layers.push_back(std::move(layer));
        }
        validateLoaded(params);
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("parameter JSON: ") + e.what());
    }
}

void saveParams(const ModelParams& params, const std::filesystem::path& path) {
    const bool json = path.extension() == ".json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << (json ? serializeJson(params) : serializeBinary(params));
    if (!out) throw IoError("failed writing " + path.string());
}

ModelParams loadParams(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return path.extension() == ".json" ? deserializeJson(bytes) : deserializeBinary(bytes);
}

}  // namespace mammo
