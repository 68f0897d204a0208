#pragma once

// MixMatch semi-supervised training pieces: K-augmentation label guessing
// with temperature sharpening, MixUp over the shuffled labeled+unlabeled
// pool, the compound supervised + ramped unsupervised loss, and
// pseudo-label based class-balance correction (PBC).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/matrix.hpp"
#include "mammo/model.hpp"
#include "mammo/preprocess.hpp"
#include "mammo/rng.hpp"

namespace mammo {

struct MixMatchConfig {
    int K = 2;
    double T = 0.25;
    double alpha = 0.75;
    double gamma = 200.0;
    double rampupDenominator = 3000.0;
    bool pbcEnabled = true;
    AugmentPolicy augment{};
    /// Overrides the Beta draw for lambda' (tests and ablations).
    std::optional<double> forcedLambda;

    void validate() const;
};

struct LabeledBatch {
    std::vector<GrayImage> images;
    std::vector<int> labels;
};

/// Images paired with row-stochastic soft labels.
struct SoftBatch {
    std::vector<GrayImage> images;
    Matrix softLabels;
};

using PseudoLabeledBatch = SoftBatch;

struct MixedBatch {
    SoftBatch labeled;    ///< mixed labeled set
    SoftBatch unlabeled;  ///< mixed pseudo-labeled set
    Matrix guessed;       ///< sharpened guesses for the unlabeled batch, before mixing
};

/// q_i = p_i^(1/T) / sum_j p_j^(1/T)
std::vector<double> sharpen(std::span<const double> p, double T);

/// Averages the model's predictions over K augmentations of each image and
/// sharpens the mean. The returned images are the first augmentation of each
/// input. Randomness is drawn augmentation-major: for k in 0..K-1, for each
/// image, one drawAugment().
PseudoLabeledBatch guessLabels(const ModelParams& params, std::span<const GrayImage> images, int K, double T,
                               Rng& rng, const AugmentPolicy& policy = {});

/// max(lambda, 1 - lambda)
double reflectMixLambda(double lambda);

/// lambda ~ Beta(alpha, alpha); returns reflectMixLambda(lambda).
double sampleMixLambda(double alpha, Rng& rng);

struct SoftExample {
    GrayImage image;
    std::vector<double> label;
};

/// lambda' * a + (1 - lambda') * b for both image and label.
SoftExample mixUp(const SoftExample& a, const SoftExample& b, double lambdaPrime);

Matrix oneHot(std::span<const int> labels, std::size_t numClasses);

/// Full MixMatch batch construction. Random draws, in order: one augmentation
/// per labeled image, guessLabels(), a shuffle of the labeled+unlabeled pool,
/// then lambda'.
MixedBatch mixMatchBatch(const LabeledBatch& labeled, std::span<const GrayImage> unlabeled,
                         const ModelParams& params, const MixMatchConfig& config, Rng& rng);

/// mixMatchBatch after the labeled augmentation step: the caller supplies the
/// augmented labeled set (one-hot or soft labels) and its own augmentation stream.
MixedBatch mixMatchAugmented(const SoftBatch& augLabeled, std::span<const GrayImage> unlabeled,
                             const ModelParams& params, const MixMatchConfig& config, Rng& rng);

/// min(step / denominator, 1)
double rampup(std::uint64_t step, double denominator = 3000.0);

struct PbcWeights {
    ClassWeights labeled;
    ClassWeights unlabeled;
};

/// w_c = N / (C * max(N_c, 1))
ClassWeights inverseFrequencyWeights(std::span<const std::uint64_t> counts);

/// Inverse-frequency weights per side.
PbcWeights pbcWeights(std::span<const std::uint64_t> labeledCounts, std::span<const std::uint64_t> pseudoCounts);

std::vector<std::uint64_t> countLabels(std::span<const int> labels, std::size_t numClasses);
std::vector<std::uint64_t> countArgmax(const Matrix& softLabels);

struct CompoundLoss {
    double loss = 0.0;
    double supervised = 0.0;
    double unsupervised = 0.0;
    double effectiveGamma = 0.0;
};

/// L = L_l + gamma * r(step) * L_u. L_l is class-weighted soft cross-entropy on
/// the mixed labeled set; L_u is the mean squared Euclidean distance on the
/// mixed unlabeled set, each row weighted by its argmax pseudo-class. Each set
/// is standardised as its own batch, so with gamma * r = 0 the update equals a
/// supervised step on the labeled set alone.
CompoundLoss compoundLoss(const ModelParams& params, const MixedBatch& mixed, const MixMatchConfig& config,
                          std::uint64_t step, const PbcWeights& weights);

struct CompoundLossGradient {
    CompoundLoss loss;
    ParamGrads grads;
};

CompoundLossGradient compoundLossGradient(const ModelParams& params, const MixedBatch& mixed,
                                          const MixMatchConfig& config, std::uint64_t step,
                                          const PbcWeights& weights);

}  // namespace mammo
