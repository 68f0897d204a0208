#pragma once

// Deep-feature dataset dissimilarity: per-feature cosine distances between
// two datasets' feature distributions, summed over features and averaged
// over repeated random batches.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/matrix.hpp"
#include "mammo/model.hpp"
#include "mammo/rng.hpp"

namespace mammo {

/// Maps a batch of images to an n x featureDim matrix.
struct FeatureSource {
    std::function<Matrix(std::span<const GrayImage>)> extractor;
    std::size_t featureDim = 0;

    /// Penultimate activations of `params` on raw (unstandardised) pixels.
    static FeatureSource penultimate(ModelParams params);
};

struct DissimilarityReport {
    std::vector<double> perBatch;
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation
    std::size_t batches = 0;
    std::size_t batchSize = 0;
};

/// 1 - a.b / (|a| |b|); both vectors must be nonzero and of equal length.
double cosineDistance(std::span<const double> a, std::span<const double> b);

struct DissimilarityOptions {
    /// Compare raw column order instead of sorted (quantile) columns.
    bool rawOrder = false;
};

/// Sum over feature columns of the cosine distance between the sorted column
/// of A and the sorted column of B. Columns where either side has zero norm
/// contribute 0.
double featureDissimilarity(const Matrix& featuresA, const Matrix& featuresB, const DissimilarityOptions& options = {});

/// Repeats `batches` times: draw batchSize images without replacement from
/// each dataset (A first, then B), extract features, accumulate the
/// dissimilarity.
DissimilarityReport dedims(const FeatureSource& source, std::span<const GrayImage> datasetA,
                           std::span<const GrayImage> datasetB, Rng& rng, std::size_t batches = 10,
                           std::size_t batchSize = 40, const DissimilarityOptions& options = {});

}  // namespace mammo
