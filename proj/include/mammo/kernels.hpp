#pragma once

// Data-parallel inner loops. Every kernel in `mammo::kernels` is OpenMP
// parallel over independent outputs; `mammo::serial` holds the plain
// reference versions. Both evaluate each output with the same arithmetic
// in the same order, so results are bitwise identical.

#include <span>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/matrix.hpp"

namespace mammo {

/// One tap of a grayscale structuring element.
struct ElementTap {
    int dx = 0;
    int dy = 0;
    double height = 0.0;
};

/// Spherical-profile structuring element used by the rolling ball.
/// Heights follow sqrt(r^2 - d^2) - r expressed on the 8-bit intensity scale
/// (one grey level = 1/255), so the centre tap has height 0.
struct BallElement {
    int radius = 0;
    std::vector<ElementTap> taps;

    static BallElement sphere(int radius);
};

/// Affine source-coordinate map for resampling: src = A * (x, y) + t.
struct AffineMap {
    double a = 1.0, b = 0.0, tx = 0.0;
    double c = 0.0, d = 1.0, ty = 0.0;
};

namespace kernels {

/// out = in * weight + bias (row-broadcast). `out` is resized.
void denseForward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out);
/// gradWeight = in^T * delta
void denseWeightGrad(const Matrix& in, const Matrix& delta, Matrix& gradWeight);
/// gradIn = delta * weight^T
void denseInputGrad(const Matrix& delta, const Matrix& weight, Matrix& gradIn);

GrayImage grayErode(const GrayImage& img, const BallElement& ball);
GrayImage grayDilate(const GrayImage& img, const BallElement& ball);

/// Square (2r+1) binary morphology; pixels outside the frame read as `pad`.
BinaryMask binaryErode(const BinaryMask& mask, int radius, bool pad = false);
BinaryMask binaryDilate(const BinaryMask& mask, int radius, bool pad = false);

/// Bilinear resampling through `map`; samples outside the frame read as 0.
GrayImage resampleBilinear(const GrayImage& src, int outWidth, int outHeight, const AffineMap& map);

}  // namespace kernels

namespace serial {

void denseForward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out);
void denseWeightGrad(const Matrix& in, const Matrix& delta, Matrix& gradWeight);
void denseInputGrad(const Matrix& delta, const Matrix& weight, Matrix& gradIn);
GrayImage grayErode(const GrayImage& img, const BallElement& ball);
GrayImage grayDilate(const GrayImage& img, const BallElement& ball);
BinaryMask binaryErode(const BinaryMask& mask, int radius, bool pad = false);
BinaryMask binaryDilate(const BinaryMask& mask, int radius, bool pad = false);
GrayImage resampleBilinear(const GrayImage& src, int outWidth, int outHeight, const AffineMap& map);

}  // namespace serial

/// Number of threads the parallel kernels will use (1 without OpenMP).
int kernelThreads();

}  // namespace mammo
