#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mammo/mixmatch.hpp"
#include "mammo/model.hpp"

namespace mammo {

/// What one SSDL epoch covers. LabeledSet: ceil(|labeled| / batchSize) steps,
/// one pass over the labeled set. UnlabeledSet: ceil(|unlabeled| / batchSize)
/// steps, labeled minibatches drawn from a reshuffled labeled cycle.
enum class EpochSpan { LabeledSet, UnlabeledSet };

const char* toString(EpochSpan span);
/// Accepts "labeled" and "unlabeled".
EpochSpan parseEpochSpan(const std::string& text);

struct TrainOptions {
    int epochs = 50;
    std::size_t batchSize = 10;
    /// Augmentation applied to every labeled minibatch.
    AugmentPolicy augment{};
    std::uint64_t seed = 0;
    /// SSDL only.
    EpochSpan epochSpan = EpochSpan::LabeledSet;
    /// SSDL only: one JSON object per optimisation step.
    std::ostream* stepLog = nullptr;
    /// Called after each epoch (and for epoch 0) with that epoch's parameters.
    std::function<void(int epoch, const ModelParams&)> onEpoch;
};

struct EpochRecord {
    int epoch = 0;
    double validationGMean = 0.0;
    double meanLoss = 0.0;
    /// SSDL only: argmax class counts of the guessed labels over the whole unlabeled pool.
    std::vector<std::uint64_t> pseudoLabelCounts;
};

struct TrainResult {
    ModelParams params;  ///< parameters of the best validation epoch
    int bestEpoch = 0;
    double bestValidationGMean = 0.0;
    std::uint64_t steps = 0;
    std::vector<EpochRecord> history;  ///< epoch 0 (initial parameters) first
};

/// Validation G-Mean of params on a labeled set (one standardised batch).
double validationGMean(const ModelParams& params, const LabeledBatch& val);

/// Minibatch SGD with inverse-frequency weighted cross-entropy. Epoch 0 (the
/// initial parameters) competes in model selection; ties keep the earlier epoch.
TrainResult trainSupervised(const LabeledBatch& labeled, const ModelParams& init, OptimState optim,
                            const TrainOptions& options, const LabeledBatch& val);

/// MixMatch training. Each step pairs the next labeled minibatch with the next
/// batchSize images of a reshuffled unlabeled cycle; there are
/// ceil(|labeled| / batchSize) steps per epoch, and the step counter driving
/// the rampup starts at optim.step.
TrainResult trainSSDL(const LabeledBatch& labeled, std::span<const GrayImage> unlabeled, const ModelParams& init,
                      OptimState optim, const MixMatchConfig& mixmatch, const TrainOptions& options,
                      const LabeledBatch& val);

/// Pseudo-label class counts recorded for `epoch` in trainSSDL's history.
std::vector<std::uint64_t> pseudoLabelDistribution(const ModelParams& params, std::span<const GrayImage> unlabeled,
                                                   const MixMatchConfig& mixmatch, std::uint64_t seed, int epoch);

}  // namespace mammo
