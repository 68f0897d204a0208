#include "mammo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mammo {

BallElement BallElement::sphere(int radius) {
    BallElement ball;
    ball.radius = radius;
    const double r2 = static_cast<double>(radius) * radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            if (d2 > r2) continue;
            ball.taps.push_back({dx, dy, (std::sqrt(r2 - d2) - radius) / 255.0});
        }
    }
    return ball;
}

int kernelThreads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace kernels {

void denseForward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out) {
    const std::size_t n = in.rows, k = in.cols, m = weight.cols;
    out = Matrix(n, m);
    const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < rows; ++i) {
        std::vector<double> acc(m, 0.0);
        const double* x = in.data.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double a = x[p];
            const double* w = weight.data.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) acc[j] += a * w[j];
        }
        double* o = out.data.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) o[j] = acc[j] + bias[j];
    }
}

void denseWeightGrad(const Matrix& in, const Matrix& delta, Matrix& gradWeight) {
    const std::size_t n = in.rows, k = in.cols, m = delta.cols;
    gradWeight = Matrix(k, m);
    const long long inner = static_cast<long long>(k);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < inner; ++p) {
        double* g = gradWeight.data.data() + p * m;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = in.data[i * k + p];
            const double* d = delta.data.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) g[j] += a * d[j];
        }
    }
}

void denseInputGrad(const Matrix& delta, const Matrix& weight, Matrix& gradIn) {
    const std::size_t n = delta.rows, m = delta.cols, k = weight.rows;
    gradIn = Matrix(n, k);
    const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < rows; ++i) {
        const double* d = delta.data.data() + i * m;
        double* g = gradIn.data.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* w = weight.data.data() + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += d[j] * w[j];
            g[p] = acc;
        }
    }
}

namespace {

template <bool Erode>
GrayImage grayMorph(const GrayImage& img, const BallElement& ball) {
    GrayImage out(img.width, img.height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double best = Erode ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
            for (const auto& t : ball.taps) {
                const int sx = x + t.dx, sy = y + t.dy;
                if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
                if constexpr (Erode) {
                    best = std::min(best, img.at(sx, sy) - t.height);
                } else {
                    best = std::max(best, img.at(sx, sy) + t.height);
                }
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

// Square elements are separable: a row pass followed by a column pass.
template <bool Erode>
BinaryMask binaryMorph(const BinaryMask& mask, int radius, bool pad) {
    const int w = mask.width, h = mask.height;
    auto read = [&](const BinaryMask& m, int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return pad;
        return m.at(x, y);
    };
    BinaryMask rows(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool v = Erode;
            for (int d = -radius; d <= radius; ++d) {
                const bool s = read(mask, x + d, y);
                v = Erode ? (v && s) : (v || s);
            }
            rows.set(x, y, v);
        }
    }
    // The column pass sees padding only through the original frame edge.
    BinaryMask out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool v = Erode;
            for (int d = -radius; d <= radius; ++d) {
                const int sy = y + d;
                const bool s = (sy < 0 || sy >= h) ? pad : rows.at(x, sy);
                v = Erode ? (v && s) : (v || s);
            }
            out.set(x, y, v);
        }
    }
    return out;
}

}  // namespace

GrayImage grayErode(const GrayImage& img, const BallElement& ball) { return grayMorph<true>(img, ball); }
GrayImage grayDilate(const GrayImage& img, const BallElement& ball) { return grayMorph<false>(img, ball); }

BinaryMask binaryErode(const BinaryMask& mask, int radius, bool pad) {
    return binaryMorph<true>(mask, radius, pad);
}
BinaryMask binaryDilate(const BinaryMask& mask, int radius, bool pad) {
    return binaryMorph<false>(mask, radius, pad);
}

GrayImage resampleBilinear(const GrayImage& src, int outWidth, int outHeight, const AffineMap& map) {
    GrayImage out(outWidth, outHeight);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < outHeight; ++y) {
        for (int x = 0; x < outWidth; ++x) {
            const double sx = map.a * x + map.b * y + map.tx;
            const double sy = map.c * x + map.d * y + map.ty;
            out.at(x, y) = detail::bilinearAt(src, sx, sy);
        }
    }
    return out;
}

}  // namespace kernels
}  // namespace mammo
