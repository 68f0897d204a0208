#pragma once

#include <cmath>

#include "mammo/image.hpp"

namespace mammo::detail {

inline double sampleOrZero(const GrayImage& img, int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
    return img.at(x, y);
}

inline double bilinearAt(const GrayImage& src, double sx, double sy) {
    const double fx0 = std::floor(sx);
    const double fy0 = std::floor(sy);
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double fx = sx - fx0;
    const double fy = sy - fy0;
    const double p00 = sampleOrZero(src, x0, y0);
    const double p10 = sampleOrZero(src, x0 + 1, y0);
    const double p01 = sampleOrZero(src, x0, y0 + 1);
    const double p11 = sampleOrZero(src, x0 + 1, y0 + 1);
    const double top = p00 + fx * (p10 - p00);
    const double bottom = p01 + fx * (p11 - p01);
    return top + fy * (bottom - top);
}

}  // namespace mammo::detail
