#pragma once

#include <filesystem>

#include "mammo/image.hpp"

namespace mammo {

/// Reads PGM (P2/P5, 8 or 16 bit) or grayscale PNG (8 or 16 bit). Values are
/// divided by the format maximum so intensities land in [0,1].
GrayImage readImage(const std::filesystem::path& path);

/// Writes a binary 16-bit PGM (P5, maxval 65535).
void writePgm16(const GrayImage& img, const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG.
void writePng8(const GrayImage& img, const std::filesystem::path& path);

}  // namespace mammo
