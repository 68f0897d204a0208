#include "mammo/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "mammo/errors.hpp"
#include "mammo/inference.hpp"
#include "mammo/metrics.hpp"

namespace mammo {

namespace {

// Substream tags under TrainOptions::seed.
enum Stream : std::uint64_t { kLabeledOrder = 1, kLabeledAugment = 2, kUnlabeledOrder = 3, kMixing = 4, kPseudoAudit = 6 };

void checkLabeled(const LabeledBatch& b, const char* what) {
    if (b.images.size() != b.labels.size()) throw ContractError(std::string(what) + ": images and labels differ in count");
}

struct Selection {
    TrainResult result;

    void consider(int epoch, const ModelParams& params, double gmean) {
        if (epoch == 0 || gmean > result.bestValidationGMean) {
            result.params = params;
            result.bestEpoch = epoch;
            result.bestValidationGMean = gmean;
        }
    }
};

std::vector<std::vector<std::size_t>> epochBatches(std::size_t n, std::size_t batchSize, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t b = 0; b < n; b += batchSize) {
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + batchSize)));
    }
    return batches;
}

struct AugmentedBatch {
    std::vector<GrayImage> images;
    std::vector<int> labels;
};

AugmentedBatch augmentedBatch(const LabeledBatch& labeled, const std::vector<std::size_t>& idx,
                              const AugmentPolicy& policy, Rng& rng) {
    AugmentedBatch b;
    for (auto i : idx) {
        b.images.push_back(augment(labeled.images[i], rng, policy));
        b.labels.push_back(labeled.labels[i]);
    }
    return b;
}

std::string where(int epoch, std::uint64_t step) {
    return " (epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ")";
}

void validateOptions(const TrainOptions& options) {
    if (options.epochs < 0) throw ContractError("epochs must be >= 0");
    if (options.batchSize == 0) throw ContractError("batch size must be >= 1");
}

}  // namespace

const char* toString(EpochSpan span) { return span == EpochSpan::LabeledSet ? "labeled" : "unlabeled"; }

EpochSpan parseEpochSpan(const std::string& text) {
    if (text == "labeled") return EpochSpan::LabeledSet;
    if (text == "unlabeled") return EpochSpan::UnlabeledSet;
    throw ConfigError("unknown epoch span: " + text);
}

double validationGMean(const ModelParams& params, const LabeledBatch& val) {
    checkLabeled(val, "validation set");
    if (val.images.empty()) throw ContractError("validation set is empty");
    return gMean(confusionFromPredictions(predictLabels(params, val.images), val.labels));
}

TrainResult trainSupervised(const LabeledBatch& labeled, const ModelParams& init, OptimState optim,
                            const TrainOptions& options, const LabeledBatch& val) {
    checkLabeled(labeled, "labeled set");
    if (labeled.images.empty()) throw ContractError("trainSupervised needs a nonempty labeled set");
    validateOptions(options);
    optim.validate();
    const ClassWeights weights = inverseFrequencyWeights(countLabels(labeled.labels, init.numClasses()));

    Rng orderRng(deriveSeed(options.seed, {kLabeledOrder}));
    Rng augRng(deriveSeed(options.seed, {kLabeledAugment}));

    Selection sel;
    sel.consider(0, init, validationGMean(init, val));
    sel.result.history.push_back({0, sel.result.bestValidationGMean, 0.0, {}});
    if (options.onEpoch) options.onEpoch(0, init);

    ModelParams params = init;
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        double lossSum = 0.0;
        const auto batches = epochBatches(labeled.images.size(), options.batchSize, orderRng);
        for (const auto& idx : batches) {
            const AugmentedBatch b = augmentedBatch(labeled, idx, options.augment, augRng);
            const Matrix inputs = modelInputs(b.images);
            const ForwardTrace trace = forward(params, inputs);
            const LossGradient lg = lossGradient(WeightedCrossEntropyLoss{b.labels, weights}, trace.probs);
            if (!std::isfinite(lg.value)) throw TrainingError("non-finite loss" + where(epoch, optim.step));
            lossSum += lg.value;
            params = sgdStep(params, backward(params, trace, inputs, lg.probGrad), optim);
        }
        const double g = validationGMean(params, val);
        sel.consider(epoch, params, g);
        sel.result.history.push_back({epoch, g, lossSum / static_cast<double>(batches.size()), {}});
        if (options.onEpoch) options.onEpoch(epoch, params);
    }
    sel.result.steps = optim.step;
    return sel.result;
}

std::vector<std::uint64_t> pseudoLabelDistribution(const ModelParams& params, std::span<const GrayImage> unlabeled,
                                                   const MixMatchConfig& mixmatch, std::uint64_t seed, int epoch) {
    Rng rng(deriveSeed(seed, {kPseudoAudit, static_cast<std::uint64_t>(epoch)}));
    return countArgmax(guessLabels(params, unlabeled, mixmatch.K, mixmatch.T, rng, mixmatch.augment).softLabels);
}

TrainResult trainSSDL(const LabeledBatch& labeled, std::span<const GrayImage> unlabeled, const ModelParams& init,
                      OptimState optim, const MixMatchConfig& mixmatch, const TrainOptions& options,
                      const LabeledBatch& val) {
    checkLabeled(labeled, "labeled set");
    if (labeled.images.empty() || unlabeled.empty()) throw ContractError("trainSSDL needs labeled and unlabeled data");
    validateOptions(options);
    optim.validate();
    mixmatch.validate();
    const std::size_t numClasses = init.numClasses();
    const auto labeledCounts = countLabels(labeled.labels, numClasses);

    Rng orderRng(deriveSeed(options.seed, {kLabeledOrder}));
    Rng augRng(deriveSeed(options.seed, {kLabeledAugment}));
    Rng unlabeledRng(deriveSeed(options.seed, {kUnlabeledOrder}));
    Rng mixRng(deriveSeed(options.seed, {kMixing}));

    std::vector<std::size_t> cycle(unlabeled.size());
    std::size_t cyclePos = cycle.size();
    auto nextUnlabeled = [&] {
        std::vector<GrayImage> out;
        const std::size_t want = std::min(options.batchSize, unlabeled.size());
        while (out.size() < want) {
            if (cyclePos == cycle.size()) {
                std::iota(cycle.begin(), cycle.end(), std::size_t{0});
                std::shuffle(cycle.begin(), cycle.end(), unlabeledRng);
                cyclePos = 0;
            }
            out.push_back(unlabeled[cycle[cyclePos++]]);
        }
        return out;
    };

    // UnlabeledSet epochs cycle the labeled set without reshuffling mid-batch.
    std::vector<std::size_t> labeledCycle(labeled.images.size());
    std::size_t labeledPos = labeledCycle.size();
    auto epochLabeledBatches = [&] {
        if (options.epochSpan == EpochSpan::LabeledSet) {
            return epochBatches(labeled.images.size(), options.batchSize, orderRng);
        }
        const std::size_t steps = (unlabeled.size() + options.batchSize - 1) / options.batchSize;
        const std::size_t want = std::min(options.batchSize, labeled.images.size());
        std::vector<std::vector<std::size_t>> batches(steps);
        for (auto& idx : batches) {
            while (idx.size() < want) {
                if (labeledPos == labeledCycle.size()) {
                    std::iota(labeledCycle.begin(), labeledCycle.end(), std::size_t{0});
                    std::shuffle(labeledCycle.begin(), labeledCycle.end(), orderRng);
                    labeledPos = 0;
                }
                idx.push_back(labeledCycle[labeledPos++]);
            }
        }
        return batches;
    };

    Selection sel;
    sel.consider(0, init, validationGMean(init, val));
    sel.result.history.push_back(
        {0, sel.result.bestValidationGMean, 0.0, pseudoLabelDistribution(init, unlabeled, mixmatch, options.seed, 0)});
    if (options.onEpoch) options.onEpoch(0, init);

    ModelParams params = init;
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        double lossSum = 0.0;
        const auto batches = epochLabeledBatches();
        for (const auto& idx : batches) {
            const AugmentedBatch b = augmentedBatch(labeled, idx, options.augment, augRng);
            SoftBatch augLabeled{b.images, oneHot(b.labels, numClasses)};
            const std::vector<GrayImage> ub = nextUnlabeled();
            const MixedBatch mixed = mixMatchAugmented(augLabeled, ub, params, mixmatch, mixRng);
            const PbcWeights weights = pbcWeights(labeledCounts, countArgmax(mixed.guessed));

            CompoundLossGradient cl;
            try {
                cl = compoundLossGradient(params, mixed, mixmatch, optim.step, weights);
            } catch (const TrainingError&) {
                throw TrainingError("non-finite MixMatch loss" + where(epoch, optim.step));
            }
            lossSum += cl.loss.loss;
            if (options.stepLog) {
                const ClassWeights lw = mixmatch.pbcEnabled ? weights.labeled : ClassWeights::uniform(numClasses);
                const ClassWeights uw = mixmatch.pbcEnabled ? weights.unlabeled : ClassWeights::uniform(numClasses);
                nlohmann::json line = {{"step", optim.step},
                                       {"epoch", epoch},
                                       {"loss", cl.loss.loss},
                                       {"supervised", cl.loss.supervised},
                                       {"unsupervised", cl.loss.unsupervised},
                                       {"effective_gamma", cl.loss.effectiveGamma},
                                       {"labeled_weights", lw.perClass},
                                       {"unlabeled_weights", uw.perClass}};
                *options.stepLog << line.dump() << '\n';
            }
            params = sgdStep(params, cl.grads, optim);
        }
        const double g = validationGMean(params, val);
        sel.consider(epoch, params, g);
        sel.result.history.push_back({epoch, g, lossSum / static_cast<double>(batches.size()),
                                      pseudoLabelDistribution(params, unlabeled, mixmatch, options.seed, epoch)});
        if (options.onEpoch) options.onEpoch(epoch, params);
    }
    sel.result.steps = optim.step;
    return sel.result;
}

}  // namespace mammo
