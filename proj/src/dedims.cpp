#include "mammo/dedims.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/metrics.hpp"
#include "mammo/preprocess.hpp"

namespace mammo {

FeatureSource FeatureSource::penultimate(ModelParams params) {
    if (params.layers.size() < 2) throw ContractError("penultimate features need at least one hidden layer");
    const std::size_t dim = params.layers[params.layers.size() - 2].weight.cols;
    return {[p = std::move(params)](std::span<const GrayImage> images) {
                return extractPenultimate(p, flattenBatch(images));
            },
            dim};
}

double cosineDistance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("cosineDistance: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ContractError("cosineDistance: zero vector");
    const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
    return 1.0 - cosine;
}

double featureDissimilarity(const Matrix& featuresA, const Matrix& featuresB, const DissimilarityOptions& options) {
    if (!featuresA.sameShape(featuresB)) throw ContractError("featureDissimilarity: shape mismatch");
    if (featuresA.rows < 2) throw ContractError("featureDissimilarity needs at least two rows");
    const std::size_t n = featuresA.rows;
    std::vector<double> colA(n), colB(n);
    double total = 0.0;
    for (std::size_t j = 0; j < featuresA.cols; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            colA[i] = featuresA(i, j);
            colB[i] = featuresB(i, j);
        }
        if (!options.rawOrder) {
            std::sort(colA.begin(), colA.end());
            std::sort(colB.begin(), colB.end());
        }
        const bool zeroA = std::all_of(colA.begin(), colA.end(), [](double v) { return v == 0.0; });
        const bool zeroB = std::all_of(colB.begin(), colB.end(), [](double v) { return v == 0.0; });
        if (zeroA || zeroB) continue;
        total += cosineDistance(colA, colB);
    }
    return total;
}

namespace {

std::vector<GrayImage> sampleWithoutReplacement(std::span<const GrayImage> data, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<GrayImage> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(data[idx[i]]);
    return out;
}

}  // namespace

DissimilarityReport dedims(const FeatureSource& source, std::span<const GrayImage> datasetA,
                           std::span<const GrayImage> datasetB, Rng& rng, std::size_t batches, std::size_t batchSize,
                           const DissimilarityOptions& options) {
    if (!source.extractor) throw ContractError("dedims: feature source has no extractor");
    if (batches == 0) throw ContractError("dedims: need at least one batch");
    if (batchSize < 2) throw ContractError("dedims: batch size must be >= 2");
    if (datasetA.size() < batchSize || datasetB.size() < batchSize) {
        throw DataError("dedims: dataset smaller than the batch size (" + std::to_string(datasetA.size()) + " and " +
                        std::to_string(datasetB.size()) + " images, batch " + std::to_string(batchSize) + ")");
    }
    DissimilarityReport report;
    report.batches = batches;
    report.batchSize = batchSize;
    for (std::size_t b = 0; b < batches; ++b) {
        const auto sampleA = sampleWithoutReplacement(datasetA, batchSize, rng);
        const auto sampleB = sampleWithoutReplacement(datasetB, batchSize, rng);
        const Matrix fa = source.extractor(sampleA);
        const Matrix fb = source.extractor(sampleB);
        if (fa.cols != source.featureDim || fb.cols != source.featureDim) {
            throw ContractError("dedims: extractor width differs from featureDim");
        }
        report.perBatch.push_back(featureDissimilarity(fa, fb, options));
    }
    std::tie(report.mean, report.std) = meanAndSampleStd(report.perBatch);
    return report;
}

}  // namespace mammo
