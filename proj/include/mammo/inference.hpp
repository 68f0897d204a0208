#pragma once

#include <span>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/matrix.hpp"
#include "mammo/model.hpp"

namespace mammo {

/// Model input for a batch of images: batch-standardised, one row per image.
Matrix modelInputs(std::span<const GrayImage> images);

/// Softmax outputs for `images`, standardised as one batch.
Matrix predictProbabilities(const ModelParams& params, std::span<const GrayImage> images);

/// Row-wise argmax; ties go to the lower class index.
std::vector<int> argmaxRows(const Matrix& probs);

std::vector<int> predictLabels(const ModelParams& params, std::span<const GrayImage> images);

}  // namespace mammo
