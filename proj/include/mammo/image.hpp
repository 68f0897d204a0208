#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mammo {

/// Row-major grayscale image with intensities in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return pixels.size(); }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill ? 1 : 0) {}

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

}  // namespace mammo
