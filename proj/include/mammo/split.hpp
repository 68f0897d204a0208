#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mammo/manifest.hpp"

namespace mammo {

struct SplitSpec {
    std::vector<std::string> trainImageIds;
    std::vector<std::string> testImageIds;
    std::uint64_t seed = 0;
    /// Positions in the sample list the split was computed from, ascending.
    std::vector<std::size_t> trainIndices;
    std::vector<std::size_t> testIndices;
};

/// Shuffled patients are assigned to train until the train image fraction
/// reaches trainFraction; the rest go to test. A class carried by at least two
/// patients must appear on both sides; the shuffle is redrawn until it does.
SplitSpec patientDisjointSplit(std::span<const Sample> samples, double trainFraction, std::uint64_t seed);
/// Excluded BI-RADS records are dropped before splitting.
SplitSpec patientDisjointSplit(const DatasetManifest& manifest, double trainFraction, std::uint64_t seed);

struct LabelBudget {
    std::vector<std::size_t> labeled;    ///< ascending positions
    std::vector<std::size_t> unlabeled;  ///< ascending positions, complement of labeled
};

/// max(1, round(n * (1 - negativeFraction))) positives, the rest negatives.
std::size_t budgetPositives(std::size_t nLabeled, double negativeFraction);

LabelBudget sampleLabelBudget(std::span<const Sample> trainSet, std::size_t nLabeled, double negativeFraction,
                              std::uint64_t seed);

/// Stratified holdout: round(fraction * n_c) images of each class, at least one
/// when the class has two or more images. Returns (kept, holdout) positions.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratifiedHoldout(std::span<const Sample> samples,
                                                                                double fraction,
                                                                                std::uint64_t seed);

}  // namespace mammo
