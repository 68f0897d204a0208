#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/manifest.hpp"
#include "mammo/metrics.hpp"
#include "mammo/mixmatch.hpp"
#include "mammo/model.hpp"
#include "mammo/train.hpp"

namespace mammo {

/// S+No-FT: source-trained model applied as is. S+FT: source model
/// fine-tuned on the labeled budget. SSDL: MixMatch from a fresh init.
/// SSDL+FT: MixMatch from the source model.
enum class Configuration { SupervisedNoFineTune, SupervisedFineTune, SSDL, SSDLFineTune };

std::string_view toString(Configuration c);
/// Accepts "S+No-FT", "S+FT", "SSDL", "SSDL+FT".
Configuration parseConfiguration(std::string_view text);
bool needsSource(Configuration c);
bool usesSSDL(Configuration c);

struct ExperimentConfig {
    Configuration configuration = Configuration::SSDLFineTune;
    std::optional<std::string> sourceManifest;
    std::string targetManifest;
    std::size_t nLabeled = 20;
    double negativeFraction = 0.95;
    std::uint64_t seed = 0;
    ClassifierConfig model{};
    OptimState optim{};
    MixMatchConfig mixmatch{};
    int epochs = 50;
    EpochSpan epochSpan = EpochSpan::LabeledSet;
    int subsets = 10;
    std::size_t batchSize = 10;
    double trainFraction = 0.7;
    /// Stratified share of the train split held out for epoch selection.
    double validationFraction = 0.15;
    /// Select epochs on the test split instead of a held-out slice.
    bool selectOnTest = false;
    /// Augmentation of labeled minibatches.
    AugmentPolicy augment{};
    bool sourceBackgroundRemoval = false;
    bool targetBackgroundRemoval = false;
    int rollingBallRadius = 5;

    /// Throws ConfigError.
    void validate() const;
};

/// Flat `key = value` text, '#' starts a comment. Unknown keys, bad values and
/// duplicates are ConfigErrors naming the line.
ExperimentConfig parseExperimentConfig(std::string_view text, const std::string& sourceName = "<config>");
/// Manifest paths are resolved against the config file's directory.
ExperimentConfig loadExperimentConfig(const std::filesystem::path& path);
/// Every field, one `key = value` per line; parseExperimentConfig round-trips it exactly.
std::string formatExperimentConfig(const ExperimentConfig& config);

struct ExperimentData {
    Dataset target;
    std::optional<Dataset> source;
    std::string targetName;
    std::string sourceName;
};

/// Loads, optionally background-removes and resizes both datasets.
ExperimentData loadExperimentData(const ExperimentConfig& config);

/// Source models keyed by everything that determines them, so runs of several
/// configurations on the same subsets pretrain once.
struct PretrainCache {
    std::map<std::string, std::pair<ModelParams, int>> entries;
};

struct RunResult {
    ExperimentConfig config;
    std::string sourceName;  ///< "-" when no source is used
    std::vector<MetricReport> perSubsetReports;
    std::vector<int> bestEpochPerSubset;
    std::vector<ConfusionMatrix> perSubsetConfusion;
};

/// Seed of subset `index` under the master seed.
std::uint64_t subsetSeed(std::uint64_t masterSeed, int index);

RunResult runConfiguration(const ExperimentConfig& config, const ExperimentData& data, PretrainCache* cache = nullptr);
RunResult runConfiguration(const ExperimentConfig& config);

std::string runResultToJson(const RunResult& result);
RunResult runResultFromJson(std::string_view text);
void saveRunResult(const RunResult& result, const std::filesystem::path& path);
RunResult loadRunResult(const std::filesystem::path& path);

}  // namespace mammo
