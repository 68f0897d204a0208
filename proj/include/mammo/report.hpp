#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mammo/experiment.hpp"
#include "mammo/stats.hpp"

namespace mammo {

/// Paired Wilcoxon test of configA against configB on one metric at one label budget.
struct Comparison {
    std::string configA;
    std::string configB;
    std::size_t nLabeled = 0;
    std::string metric;
    /// Empty when every paired difference is zero.
    std::optional<WilcoxonResult> result;
};

/// Tests every (nLabeled, metric) where both configurations have a run. Runs
/// are paired subset by subset.
std::vector<Comparison> compareRuns(const std::vector<RunResult>& results, Configuration a, Configuration b,
                                    const std::vector<std::string>& metrics, Alternative alternative);

struct ReportOptions {
    std::vector<std::string> metrics = metricNames();
    double significanceLevel = 0.1;
};

/// Header: config,source,n_labels,metric,mean,std,p_value,mark. One row per
/// (n_labels, metric, run) ordered by label budget, then metric, then run
/// order. p_value and mark ("*" when p < significanceLevel) fill the rows of
/// the first configuration of a matching comparison.
std::string reportCsv(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                      const ReportOptions& options = {});
std::string reportJson(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                       const ReportOptions& options = {});
/// Writes `<prefix>.csv` and `<prefix>.json`.
void emitReport(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                const std::filesystem::path& prefix, const ReportOptions& options = {});

struct SuiteSpec {
    ExperimentConfig base;
    std::vector<Configuration> configurations{Configuration::SupervisedNoFineTune, Configuration::SupervisedFineTune,
                                              Configuration::SSDL, Configuration::SSDLFineTune};
    std::vector<std::size_t> nLabeled{20, 40, 60};
    Configuration compareA = Configuration::SSDLFineTune;
    Configuration compareB = Configuration::SupervisedFineTune;
    Alternative alternative = Alternative::TwoSided;
    std::vector<std::string> metrics = metricNames();
};

struct SuiteResult {
    std::vector<RunResult> runs;
    std::vector<Comparison> comparisons;
};

/// Every configuration at every label budget under base.seed, sharing source pretraining.
SuiteResult runSuite(const SuiteSpec& spec, const ExperimentData& data);

}  // namespace mammo
