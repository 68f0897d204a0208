#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/manifest.hpp"

namespace mammo {

/// Synthetic mammogram-like corpus. Each image holds a smooth bright lobe
/// attached to one side edge; positives add a compact bright mass inside the
/// lobe. domainShift in [0, 1] bends the intensity curve, raises noise,
/// shrinks the lobe and softens the mass, so it survives per-batch
/// standardisation. Tags are small bright rectangles in the far corner.
struct SyntheticSpec {
    int nPatients = 87;
    /// Mean images per patient; the total is round(nPatients * imagesPerPatient).
    double imagesPerPatient = 282.0 / 87.0;
    double positiveRate = 0.05;
    double domainShift = 0.0;
    bool tagArtifacts = false;
    int size = 64;
    std::uint64_t seed = 0;
    std::string idPrefix = "syn";

    void validate() const;
};

struct SyntheticCorpus {
    DatasetManifest manifest;
    std::vector<GrayImage> images;
    /// Ownership maps aligned with images: pixels dominated by the lobe / a tag.
    std::vector<BinaryMask> lobeMasks;
    std::vector<BinaryMask> tagMasks;
};

SyntheticCorpus generateSynthetic(const SyntheticSpec& spec);

enum class ImageFormat { Pgm16, Png8 };

/// Writes images under `dir` and `dir/manifest.csv`; returns the manifest path.
std::filesystem::path writeSynthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir,
                                     ImageFormat format = ImageFormat::Pgm16);

}  // namespace mammo
