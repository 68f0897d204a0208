#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/kernels.hpp"
#include "mammo/matrix.hpp"
#include "mammo/rng.hpp"

namespace mammo {

// ---------------------------------------------------------------------------
// Labels

enum class BinaryLabel { Negative, Positive, Excluded };

const char* toString(BinaryLabel label);

/// BI-RADS 1,2 -> Negative; 4,5,6 -> Positive; 0,3 -> Excluded.
/// Categories outside 0..6 raise DataError naming `recordId`.
BinaryLabel binarizeBirads(int category, std::string_view recordId = {});

// ---------------------------------------------------------------------------
// Geometry

/// Align-corners bilinear resize: output corners sample input corners exactly.
GrayImage resizeBilinear(const GrayImage& img, int outWidth = 224, int outHeight = 224);

// ---------------------------------------------------------------------------
// Background removal

struct RollingBallResult {
    GrayImage background;  ///< grayscale opening with a ball of the given radius
    GrayImage subtracted;  ///< clamp(img - background, 0, 1)
};

RollingBallResult rollingBallBackground(const GrayImage& img, int radius = 5);

/// 256-bin histogram over [0,1]; value v falls in bin round(255 v).
std::array<double, 256> intensityHistogram(const GrayImage& img);

/// Huang-Wang fuzzy-entropy threshold on a histogram. Returns the last bin of
/// the dark class (pixels in bins > result are foreground). Ties resolve to the
/// lowest bin. Throws DataError when fewer than two bins are occupied.
int huangThresholdBin(const std::array<double, 256>& histogram);

/// Threshold in [0,1]: a pixel is foreground iff value >= threshold.
double huangThreshold(const GrayImage& img);

BinaryMask thresholdMask(const GrayImage& img, double threshold);

BinaryMask erode(const BinaryMask& mask, int kernelRadius);
BinaryMask dilate(const BinaryMask& mask, int kernelRadius);

struct BackgroundRemoval {
    GrayImage image;       ///< input with background pixels set to 0
    BinaryMask mask;       ///< foreground map
    double threshold = 0;  ///< Huang threshold on the rolling-ball background
    double foregroundFraction() const;
};

struct BackgroundRemovalOptions {
    int rollingBallRadius = 5;
    int morphologyRadius = 1;
};

/// Rolling ball -> Huang threshold -> erosion -> dilation -> mask the input.
BackgroundRemoval removeBackground(const GrayImage& img, const BackgroundRemovalOptions& options = {});

// ---------------------------------------------------------------------------
// Model input

/// Standardises the whole batch with one mean/std over all pixels:
/// (x - mean) / (std + 1e-8). Row i of the result is image i flattened.
Matrix standardizeBatch(std::span<const GrayImage> batch);

/// Flattens images into rows without any normalisation.
Matrix flattenBatch(std::span<const GrayImage> batch);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentPolicy {
    double flipProbability = 0.5;
    double maxRotationDeg = 10.0;

    static AugmentPolicy identity() { return {0.0, 0.0}; }
};

struct AugmentDraw {
    bool flip = false;
    double angleDeg = 0.0;
};

/// Consumes exactly two uniforms from `rng` regardless of the policy.
AugmentDraw drawAugment(const AugmentPolicy& policy, Rng& rng);

/// Horizontal flip (if drawn) then rotation about the image centre with
/// bilinear resampling and zero fill.
GrayImage applyAugment(const GrayImage& img, const AugmentDraw& draw);

GrayImage augment(const GrayImage& img, Rng& rng, const AugmentPolicy& policy = {});

GrayImage flipHorizontal(const GrayImage& img);

/// Output-to-source map of a rotation by `angleDeg` about the image centre.
AffineMap rotationMap(int width, int height, double angleDeg);

}  // namespace mammo
