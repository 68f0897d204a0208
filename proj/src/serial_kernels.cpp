// Reference implementations: straight loops, no threading. Kept for tests
// and for the benchmark baseline.
#include <algorithm>
#include <limits>

#include "kernels_common.hpp"
#include "mammo/kernels.hpp"

namespace mammo::serial {

void denseForward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out) {
    out = Matrix(in.rows, weight.cols);
    for (std::size_t i = 0; i < in.rows; ++i) {
        for (std::size_t j = 0; j < weight.cols; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < in.cols; ++p) acc += in(i, p) * weight(p, j);
            out(i, j) = acc + bias[j];
        }
    }
}

void denseWeightGrad(const Matrix& in, const Matrix& delta, Matrix& gradWeight) {
    gradWeight = Matrix(in.cols, delta.cols);
    for (std::size_t p = 0; p < in.cols; ++p) {
        for (std::size_t j = 0; j < delta.cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < in.rows; ++i) acc += in(i, p) * delta(i, j);
            gradWeight(p, j) = acc;
        }
    }
}

void denseInputGrad(const Matrix& delta, const Matrix& weight, Matrix& gradIn) {
    gradIn = Matrix(delta.rows, weight.rows);
    for (std::size_t i = 0; i < delta.rows; ++i) {
        for (std::size_t p = 0; p < weight.rows; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < delta.cols; ++j) acc += delta(i, j) * weight(p, j);
            gradIn(i, p) = acc;
        }
    }
}

GrayImage grayErode(const GrayImage& img, const BallElement& ball) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& t : ball.taps) {
                const int sx = x + t.dx, sy = y + t.dy;
                if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
                best = std::min(best, img.at(sx, sy) - t.height);
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

GrayImage grayDilate(const GrayImage& img, const BallElement& ball) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& t : ball.taps) {
                const int sx = x + t.dx, sy = y + t.dy;
                if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
                best = std::max(best, img.at(sx, sy) + t.height);
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

BinaryMask binaryErode(const BinaryMask& mask, int radius, bool pad) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool v = true;
            for (int dy = -radius; dy <= radius && v; ++dy) {
                for (int dx = -radius; dx <= radius && v; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    const bool inside = sx >= 0 && sy >= 0 && sx < mask.width && sy < mask.height;
                    v = inside ? mask.at(sx, sy) : pad;
                }
            }
            out.set(x, y, v);
        }
    }
    return out;
}

BinaryMask binaryDilate(const BinaryMask& mask, int radius, bool pad) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool v = false;
            for (int dy = -radius; dy <= radius && !v; ++dy) {
                for (int dx = -radius; dx <= radius && !v; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    const bool inside = sx >= 0 && sy >= 0 && sx < mask.width && sy < mask.height;
                    v = inside ? mask.at(sx, sy) : pad;
                }
            }
            out.set(x, y, v);
        }
    }
    return out;
}

GrayImage resampleBilinear(const GrayImage& src, int outWidth, int outHeight, const AffineMap& map) {
    GrayImage out(outWidth, outHeight);
    for (int y = 0; y < outHeight; ++y) {
        for (int x = 0; x < outWidth; ++x) {
            const double sx = map.a * x + map.b * y + map.tx;
            const double sy = map.c * x + map.d * y + map.ty;
            out.at(x, y) = detail::bilinearAt(src, sx, sy);
        }
    }
    return out;
}

}  // namespace mammo::serial
