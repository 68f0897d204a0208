#include "mammo/inference.hpp"

#include "mammo/preprocess.hpp"

namespace mammo {

Matrix modelInputs(std::span<const GrayImage> images) { return standardizeBatch(images); }

Matrix predictProbabilities(const ModelParams& params, std::span<const GrayImage> images) {
    return forward(params, modelInputs(images)).probs;
}

std::vector<int> argmaxRows(const Matrix& probs) {
    std::vector<int> out(probs.rows, 0);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        auto r = probs.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < r.size(); ++c) {
            if (r[c] > r[best]) best = c;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

std::vector<int> predictLabels(const ModelParams& params, std::span<const GrayImage> images) {
    return argmaxRows(predictProbabilities(params, images));
}

}  // namespace mammo
