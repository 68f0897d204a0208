#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/image.hpp"
#include "mammo/preprocess.hpp"

namespace mammo {

enum class View { CC, MLO };
enum class Side { Left, Right };

struct ManifestRecord {
    std::string imagePath;
    std::string patientId;
    int birads = 1;
    View view = View::CC;
    Side side = Side::Left;
    std::optional<int> ageYears;
};

/// CSV header: image_path,patient_id,birads,view,side,age
struct DatasetManifest {
    std::vector<ManifestRecord> records;
    /// Directory image paths are resolved against (the manifest's directory when loaded).
    std::filesystem::path root;
};

inline constexpr std::string_view kManifestHeader = "image_path,patient_id,birads,view,side,age";

/// Parses manifest CSV text. Errors carry `sourceName` and 1-based line numbers.
DatasetManifest parseManifest(std::string_view text, const std::string& sourceName = "<manifest>");
DatasetManifest loadManifest(const std::filesystem::path& path);
std::string formatManifest(const DatasetManifest& manifest);
void writeManifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Binary labels for every record (Excluded included).
std::vector<BinaryLabel> binarizeManifest(const DatasetManifest& manifest);

/// One binary-labelled image of a dataset.
struct Sample {
    std::string imageId;
    std::string patientId;
    int label = 0;  ///< 0 negative, 1 positive
};

/// Binary-labelled images held in memory, aligned index-by-index with samples.
struct Dataset {
    std::vector<Sample> samples;
    std::vector<GrayImage> images;

    std::size_t size() const { return samples.size(); }
    std::size_t positives() const;
    /// Subset by sample indices, preserving the given order.
    Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Drops Excluded records; optionally resizes every image to width x height.
Dataset datasetFromImages(const DatasetManifest& manifest, std::vector<GrayImage> images,
                          std::optional<std::pair<int, int>> resizeTo = std::nullopt);
/// Reads every image of the manifest (relative to manifest.root).
Dataset loadDataset(const DatasetManifest& manifest, std::optional<std::pair<int, int>> resizeTo = std::nullopt);

}  // namespace mammo
