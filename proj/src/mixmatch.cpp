#include "mammo/mixmatch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/inference.hpp"

namespace mammo {

void MixMatchConfig::validate() const {
    if (K < 1) throw ConfigError("MixMatch K must be >= 1");
    if (!(T > 0.0)) throw ConfigError("MixMatch temperature must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("MixMatch alpha must be > 0");
    if (!(gamma >= 0.0)) throw ConfigError("MixMatch gamma must be >= 0");
    if (!(rampupDenominator > 0.0)) throw ConfigError("rampup denominator must be > 0");
    if (forcedLambda && (*forcedLambda < 0.5 || *forcedLambda > 1.0)) {
        throw ConfigError("forced lambda must lie in [0.5, 1]");
    }
}

std::vector<double> sharpen(std::span<const double> p, double T) {
    if (!(T > 0.0)) throw ContractError("sharpen temperature must be > 0");
    if (p.empty()) throw ContractError("sharpen of an empty vector");
    // Scale by the max first so p^(1/T) cannot underflow to all zeros.
    const double mx = *std::max_element(p.begin(), p.end());
    if (!(mx > 0.0)) throw ContractError("sharpen of an all-zero vector");
    std::vector<double> q(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0) throw ContractError("sharpen of a vector with negative entries");
        q[i] = std::pow(p[i] / mx, 1.0 / T);
        sum += q[i];
    }
    for (double& v : q) v /= sum;
    return q;
}

PseudoLabeledBatch guessLabels(const ModelParams& params, std::span<const GrayImage> images, int K, double T,
                               Rng& rng, const AugmentPolicy& policy) {
    if (K < 1) throw ContractError("guessLabels needs K >= 1");
    if (images.empty()) throw ContractError("guessLabels on an empty batch");
    PseudoLabeledBatch out;
    Matrix mean;
    for (int k = 0; k < K; ++k) {
        std::vector<GrayImage> augmented;
        augmented.reserve(images.size());
        for (const auto& img : images) augmented.push_back(augment(img, rng, policy));
        Matrix probs = predictProbabilities(params, augmented);
        if (k == 0) {
            mean = std::move(probs);
            out.images = std::move(augmented);
        } else {
            for (std::size_t i = 0; i < mean.data.size(); ++i) mean.data[i] += probs.data[i];
        }
    }
    for (double& v : mean.data) v /= K;
    out.softLabels = Matrix(mean.rows, mean.cols);
    for (std::size_t i = 0; i < mean.rows; ++i) {
        const auto q = sharpen(mean.row(i), T);
        std::copy(q.begin(), q.end(), out.softLabels.row(i).begin());
    }
    return out;
}

double reflectMixLambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("mix lambda must lie in [0, 1]");
    return std::max(lambda, 1.0 - lambda);
}

double sampleMixLambda(double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw ContractError("MixUp alpha must be > 0");
    std::gamma_distribution<double> g(alpha, 1.0);
    const double x = g(rng);
    const double y = g(rng);
    const double lambda = (x + y) > 0.0 ? x / (x + y) : 0.5;
    return reflectMixLambda(lambda);
}

SoftExample mixUp(const SoftExample& a, const SoftExample& b, double lambdaPrime) {
    if (a.image.width != b.image.width || a.image.height != b.image.height) {
        throw ContractError("mixUp: image shapes differ");
    }
    if (a.label.size() != b.label.size()) throw ContractError("mixUp: label sizes differ");
    if (!(lambdaPrime >= 0.5 && lambdaPrime <= 1.0)) throw ContractError("mixUp: lambda' must lie in [0.5, 1]");
    const double mu = 1.0 - lambdaPrime;
    SoftExample out{GrayImage(a.image.width, a.image.height), std::vector<double>(a.label.size())};
    for (std::size_t i = 0; i < a.image.size(); ++i) {
        out.image.pixels[i] = lambdaPrime * a.image.pixels[i] + mu * b.image.pixels[i];
    }
    for (std::size_t c = 0; c < a.label.size(); ++c) out.label[c] = lambdaPrime * a.label[c] + mu * b.label[c];
    return out;
}

Matrix oneHot(std::span<const int> labels, std::size_t numClasses) {
    Matrix m(labels.size(), numClasses);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= numClasses) {
            throw ContractError("label out of range");
        }
        m(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return m;
}

namespace {

SoftExample exampleAt(const SoftBatch& b, std::size_t i) {
    auto r = b.softLabels.row(i);
    return {b.images[i], {r.begin(), r.end()}};
}

void appendExample(SoftBatch& b, SoftExample&& e, std::size_t row) {
    std::copy(e.label.begin(), e.label.end(), b.softLabels.row(row).begin());
    b.images.push_back(std::move(e.image));
}

}  // namespace

MixedBatch mixMatchBatch(const LabeledBatch& labeled, std::span<const GrayImage> unlabeled,
                         const ModelParams& params, const MixMatchConfig& config, Rng& rng) {
    config.validate();
    if (labeled.images.size() != labeled.labels.size()) throw ContractError("labeled images and labels differ in count");
    SoftBatch augLabeled;
    for (const auto& img : labeled.images) augLabeled.images.push_back(augment(img, rng, config.augment));
    augLabeled.softLabels = oneHot(labeled.labels, params.numClasses());
    return mixMatchAugmented(augLabeled, unlabeled, params, config, rng);
}

MixedBatch mixMatchAugmented(const SoftBatch& augLabeled, std::span<const GrayImage> unlabeled,
                             const ModelParams& params, const MixMatchConfig& config, Rng& rng) {
    config.validate();
    if (augLabeled.images.empty() || unlabeled.empty()) throw ContractError("mixMatchBatch needs both batches nonempty");
    if (augLabeled.softLabels.rows != augLabeled.images.size()) throw ContractError("labeled images and labels differ in count");
    const std::size_t numClasses = params.numClasses();
    if (augLabeled.softLabels.cols != numClasses) throw ContractError("labeled soft labels do not match class count");

    const SoftBatch guessed = guessLabels(params, unlabeled, config.K, config.T, rng, config.augment);

    const std::size_t nl = augLabeled.images.size();
    const std::size_t nu = guessed.images.size();
    std::vector<std::size_t> order(nl + nu);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    auto poolAt = [&](std::size_t idx) { return idx < nl ? exampleAt(augLabeled, idx) : exampleAt(guessed, idx - nl); };

    const double lambda = config.forcedLambda ? *config.forcedLambda : sampleMixLambda(config.alpha, rng);

    MixedBatch mixed;
    mixed.labeled.softLabels = Matrix(nl, numClasses);
    mixed.unlabeled.softLabels = Matrix(nu, numClasses);
    mixed.guessed = guessed.softLabels;
    for (std::size_t i = 0; i < nl; ++i) {
        appendExample(mixed.labeled, mixUp(exampleAt(augLabeled, i), poolAt(order[i]), lambda), i);
    }
    for (std::size_t j = 0; j < nu; ++j) {
        appendExample(mixed.unlabeled, mixUp(exampleAt(guessed, j), poolAt(order[nl + j]), lambda), j);
    }
    return mixed;
}

double rampup(std::uint64_t step, double denominator) {
    if (!(denominator > 0.0)) throw ContractError("rampup denominator must be > 0");
    return std::min(static_cast<double>(step) / denominator, 1.0);
}

ClassWeights inverseFrequencyWeights(std::span<const std::uint64_t> counts) {
    if (counts.empty()) throw ContractError("inverse-frequency weights need at least one class");
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                         [](double s, std::uint64_t c) { return s + static_cast<double>(c); });
    if (!(total > 0.0)) throw ContractError("inverse-frequency weights need a nonzero total count");
    ClassWeights w;
    const auto classes = static_cast<double>(counts.size());
    for (auto c : counts) w.perClass.push_back(total / (classes * static_cast<double>(std::max<std::uint64_t>(c, 1))));
    return w;
}

PbcWeights pbcWeights(std::span<const std::uint64_t> labeledCounts, std::span<const std::uint64_t> pseudoCounts) {
    return {inverseFrequencyWeights(labeledCounts), inverseFrequencyWeights(pseudoCounts)};
}

std::vector<std::uint64_t> countLabels(std::span<const int> labels, std::size_t numClasses) {
    std::vector<std::uint64_t> counts(numClasses, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= numClasses) throw ContractError("label out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

std::vector<std::uint64_t> countArgmax(const Matrix& softLabels) {
    std::vector<std::uint64_t> counts(softLabels.cols, 0);
    for (int y : argmaxRows(softLabels)) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

CompoundLossGradient compoundLossGradient(const ModelParams& params, const MixedBatch& mixed,
                                          const MixMatchConfig& config, std::uint64_t step,
                                          const PbcWeights& weights) {
    const std::size_t nl = mixed.labeled.images.size();
    const std::size_t nu = mixed.unlabeled.images.size();
    if (nl == 0 || nu == 0) throw ContractError("compound loss needs both mixed sets nonempty");
    if (mixed.labeled.softLabels.rows != nl || mixed.unlabeled.softLabels.rows != nu) {
        throw ContractError("mixed batch labels do not match image counts");
    }
    const std::size_t numClasses = params.numClasses();
    const ClassWeights labeledW = config.pbcEnabled ? weights.labeled : ClassWeights::uniform(numClasses);
    const ClassWeights unlabeledW = config.pbcEnabled ? weights.unlabeled : ClassWeights::uniform(numClasses);

    // Each mixed set is standardised as its own batch; rows are stacked labeled-first.
    const Matrix inputsL = modelInputs(mixed.labeled.images);
    const Matrix inputsU = modelInputs(mixed.unlabeled.images);
    Matrix inputs(nl + nu, inputsL.cols);
    std::copy(inputsL.data.begin(), inputsL.data.end(), inputs.data.begin());
    std::copy(inputsU.data.begin(), inputsU.data.end(), inputs.data.begin() + static_cast<std::ptrdiff_t>(inputsL.data.size()));
    const ForwardTrace trace = forward(params, inputs);

    auto rows = [&](std::size_t begin, std::size_t count) {
        Matrix m(count, trace.probs.cols);
        std::copy_n(trace.probs.data.begin() + static_cast<std::ptrdiff_t>(begin * m.cols), count * m.cols, m.data.begin());
        return m;
    };
    const Matrix probsL = rows(0, nl);
    const Matrix probsU = rows(nl, nu);

    std::vector<double> rowWeights(nu);
    const auto pseudoClass = argmaxRows(mixed.unlabeled.softLabels);
    if (unlabeledW.perClass.size() != numClasses) throw ContractError("unlabeled weight count does not match classes");
    for (std::size_t j = 0; j < nu; ++j) rowWeights[j] = unlabeledW.perClass[static_cast<std::size_t>(pseudoClass[j])];

    const LossGradient sup = lossGradient(SoftCrossEntropyLoss{mixed.labeled.softLabels, labeledW}, probsL);
    const LossGradient unsup = lossGradient(EuclideanLoss{mixed.unlabeled.softLabels, rowWeights}, probsU);

    CompoundLossGradient out;
    out.loss.supervised = sup.value;
    out.loss.unsupervised = unsup.value;
    out.loss.effectiveGamma = config.gamma * rampup(step, config.rampupDenominator);
    out.loss.loss = out.loss.effectiveGamma == 0.0 ? sup.value : sup.value + out.loss.effectiveGamma * unsup.value;
    if (!std::isfinite(out.loss.loss)) {
        throw TrainingError("non-finite MixMatch loss at step " + std::to_string(step));
    }

    Matrix probGrad(nl + nu, trace.probs.cols);
    std::copy(sup.probGrad.data.begin(), sup.probGrad.data.end(), probGrad.data.begin());
    for (std::size_t k = 0; k < unsup.probGrad.data.size(); ++k) {
        probGrad.data[nl * probGrad.cols + k] = out.loss.effectiveGamma * unsup.probGrad.data[k];
    }
    out.grads = backward(params, trace, inputs, probGrad);
    return out;
}

CompoundLoss compoundLoss(const ModelParams& params, const MixedBatch& mixed, const MixMatchConfig& config,
                          std::uint64_t step, const PbcWeights& weights) {
    return compoundLossGradient(params, mixed, config, step, weights).loss;
}

}  // namespace mammo
