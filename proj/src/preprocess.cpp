#include "mammo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mammo/errors.hpp"

namespace mammo {

const char* toString(BinaryLabel label) {
    switch (label) {
        case BinaryLabel::Negative: return "negative";
        case BinaryLabel::Positive: return "positive";
        case BinaryLabel::Excluded: return "excluded";
    }
    return "?";
}

BinaryLabel binarizeBirads(int category, std::string_view recordId) {
    switch (category) {
        case 1:
        case 2: return BinaryLabel::Negative;
        case 4:
        case 5:
        case 6: return BinaryLabel::Positive;
        case 0:
        case 3: return BinaryLabel::Excluded;
        default:
            throw DataError("invalid BI-RADS category " + std::to_string(category) +
                            (recordId.empty() ? std::string() : " for record '" + std::string(recordId) + "'"));
    }
}

namespace {

void clampUnit(GrayImage& img) {
    for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

GrayImage resizeBilinear(const GrayImage& img, int outWidth, int outHeight) {
    if (img.width < 2 || img.height < 2) throw ContractError("resize needs an input of at least 2x2 pixels");
    if (outWidth < 1 || outHeight < 1) throw ContractError("resize target must be at least 1x1");
    AffineMap map;
    map.a = outWidth > 1 ? static_cast<double>(img.width - 1) / (outWidth - 1) : 0.0;
    map.d = outHeight > 1 ? static_cast<double>(img.height - 1) / (outHeight - 1) : 0.0;
    GrayImage out = kernels::resampleBilinear(img, outWidth, outHeight, map);
    clampUnit(out);
    return out;
}

RollingBallResult rollingBallBackground(const GrayImage& img, int radius) {
    if (radius < 1) throw ContractError("rolling ball radius must be >= 1");
    if (2 * radius > std::min(img.width, img.height)) {
        throw ContractError("rolling ball radius " + std::to_string(radius) + " exceeds half the image extent");
    }
    const BallElement ball = BallElement::sphere(radius);
    RollingBallResult r;
    r.background = kernels::grayDilate(kernels::grayErode(img, ball), ball);
    r.subtracted = GrayImage(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        r.subtracted.pixels[i] = std::clamp(img.pixels[i] - r.background.pixels[i], 0.0, 1.0);
    }
    return r;
}

std::array<double, 256> intensityHistogram(const GrayImage& img) {
    std::array<double, 256> hist{};
    for (double v : img.pixels) {
        const long bin = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
        hist[static_cast<std::size_t>(bin)] += 1.0;
    }
    return hist;
}

int huangThresholdBin(const std::array<double, 256>& hist) {
    int first = 0;
    while (first < 256 && hist[first] == 0.0) ++first;
    int last = 255;
    while (last >= 0 && hist[last] == 0.0) --last;
    if (first >= last) throw DataError("image has a single intensity level; no threshold exists");

    // Running class means: below[t] over bins <= t, above[t] over bins > t.
    std::array<double, 256> below{}, above{};
    double sum = 0.0, count = 0.0;
    for (int b = first; b <= last; ++b) {
        sum += b * hist[b];
        count += hist[b];
        below[b] = count > 0.0 ? sum / count : 0.0;
    }
    sum = count = 0.0;
    for (int b = last; b > first; --b) {
        sum += b * hist[b];
        count += hist[b];
        above[b - 1] = sum / count;
    }

    const double spread = static_cast<double>(last - first);
    auto fuzzyEntropy = [](double mu) {
        if (mu <= 0.0 || mu >= 1.0) return 0.0;
        return -mu * std::log(mu) - (1.0 - mu) * std::log(1.0 - mu);
    };

    int best = first;
    double bestEntropy = std::numeric_limits<double>::infinity();
    for (int t = first; t < last; ++t) {
        double entropy = 0.0;
        for (int b = first; b <= last; ++b) {
            if (hist[b] == 0.0) continue;
            const double mean = b <= t ? below[t] : above[t];
            const double mu = 1.0 / (1.0 + std::abs(b - mean) / spread);
            entropy += hist[b] * fuzzyEntropy(mu);
        }
        if (entropy < bestEntropy) {
            bestEntropy = entropy;
            best = t;
        }
    }
    return best;
}

double huangThreshold(const GrayImage& img) {
    return (huangThresholdBin(intensityHistogram(img)) + 0.5) / 255.0;
}

BinaryMask thresholdMask(const GrayImage& img, double threshold) {
    BinaryMask m(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) m.bits[i] = img.pixels[i] >= threshold ? 1 : 0;
    return m;
}

BinaryMask erode(const BinaryMask& mask, int kernelRadius) {
    if (kernelRadius < 1) throw ContractError("morphology kernel radius must be >= 1");
    return kernels::binaryErode(mask, kernelRadius, false);
}

BinaryMask dilate(const BinaryMask& mask, int kernelRadius) {
    if (kernelRadius < 1) throw ContractError("morphology kernel radius must be >= 1");
    return kernels::binaryDilate(mask, kernelRadius, false);
}

double BackgroundRemoval::foregroundFraction() const {
    return mask.bits.empty() ? 0.0 : static_cast<double>(mask.count()) / static_cast<double>(mask.bits.size());
}

BackgroundRemoval removeBackground(const GrayImage& img, const BackgroundRemovalOptions& options) {
    // The ball estimate keeps structures wider than the ball (breast tissue)
    // and drops narrow bright ones (tags, labels), so the mask is thresholded
    // on the background estimate rather than on the top-hat residue.
    const RollingBallResult ball = rollingBallBackground(img, options.rollingBallRadius);
    BackgroundRemoval out;
    out.threshold = huangThreshold(ball.background);
    out.mask = dilate(erode(thresholdMask(ball.background, out.threshold), options.morphologyRadius),
                      options.morphologyRadius);
    out.image = img;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!out.mask.bits[i]) out.image.pixels[i] = 0.0;
    }
    return out;
}

Matrix standardizeBatch(std::span<const GrayImage> batch) {
    Matrix out = flattenBatch(batch);
    const auto n = static_cast<double>(out.data.size());
    // Shifted by the first pixel: exact for constant batches.
    const double shift = out.data.empty() ? 0.0 : out.data.front();
    double offset = 0.0;
    for (double v : out.data) offset += v - shift;
    const double mean = shift + offset / n;
    double var = 0.0;
    for (double v : out.data) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    for (double& v : out.data) v = (v - mean) / (sd + 1e-8);
    return out;
}

Matrix flattenBatch(std::span<const GrayImage> batch) {
    if (batch.empty()) throw ContractError("empty image batch");
    const int w = batch.front().width, h = batch.front().height;
    Matrix out(batch.size(), static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].width != w || batch[i].height != h) throw ContractError("images in a batch must share dimensions");
        std::copy(batch[i].pixels.begin(), batch[i].pixels.end(), out.row(i).begin());
    }
    return out;
}

AugmentDraw drawAugment(const AugmentPolicy& policy, Rng& rng) {
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return {u1 < policy.flipProbability, (2.0 * u2 - 1.0) * policy.maxRotationDeg};
}

GrayImage flipHorizontal(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
    }
    return out;
}

AffineMap rotationMap(int width, int height, double angleDeg) {
    const double theta = angleDeg * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
    AffineMap m;
    m.a = c;
    m.b = s;
    m.tx = cx - c * cx - s * cy;
    m.c = -s;
    m.d = c;
    m.ty = cy + s * cx - c * cy;
    return m;
}

GrayImage applyAugment(const GrayImage& img, const AugmentDraw& draw) {
    GrayImage out = draw.flip ? flipHorizontal(img) : img;
    if (draw.angleDeg != 0.0) {
        out = kernels::resampleBilinear(out, out.width, out.height, rotationMap(out.width, out.height, draw.angleDeg));
        clampUnit(out);
    }
    return out;
}

GrayImage augment(const GrayImage& img, Rng& rng, const AugmentPolicy& policy) {
    return applyAugment(img, drawAugment(policy, rng));
}

}  // namespace mammo
