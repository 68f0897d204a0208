#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mammo {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Names used in reports, flags and JSON keys.
namespace metric {
inline constexpr const char* kAccuracy = "accuracy";
inline constexpr const char* kRecall = "recall";
inline constexpr const char* kSpecificity = "specificity";
inline constexpr const char* kPrecision = "precision";
inline constexpr const char* kF2 = "f2";
inline constexpr const char* kGMean = "g_mean";
inline constexpr const char* kBalancedAccuracy = "balanced_accuracy";
}  // namespace metric

/// Ordered list of the seven reported metrics.
const std::vector<std::string>& metricNames();

struct MetricReport {
    double accuracy = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    double f2 = 0.0;
    double gMean = 0.0;
    double balancedAccuracy = 0.0;
    /// Metrics whose denominator was zero (value reported as 0).
    std::set<std::string> degenerateFlags;

    /// Value by metric name; throws ContractError on unknown names.
    double get(const std::string& name) const;
};

ConfusionMatrix confusionFromPredictions(std::span<const int> predicted, std::span<const int> actual,
                                         int positiveLabel = 1);

// Each ratio returns 0 when its denominator is zero; pass `flags` to learn
// which ones degenerated.
double accuracy(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm, std::set<std::string>* flags = nullptr);
double specificity(const ConfusionMatrix& cm, std::set<std::string>* flags = nullptr);
double precision(const ConfusionMatrix& cm, std::set<std::string>* flags = nullptr);
/// (1+b^2) P R / (b^2 P + R); beta must be > 0.
double fbeta(const ConfusionMatrix& cm, double beta, std::set<std::string>* flags = nullptr);
double balancedAccuracy(const ConfusionMatrix& cm, std::set<std::string>* flags = nullptr);
double gMean(const ConfusionMatrix& cm, std::set<std::string>* flags = nullptr);

MetricReport evaluateMetrics(const ConfusionMatrix& cm);

struct MetricSummary {
    std::string metric;
    double mean = 0.0;
    double std = 0.0;  ///< sample (n-1) standard deviation; 0 when n == 1
};

/// One summary per metric, in metricNames() order.
std::vector<MetricSummary> aggregate(std::span<const MetricReport> reports);

/// Mean and sample standard deviation of `values` (single pass, Welford).
std::pair<double, double> meanAndSampleStd(std::span<const double> values);

}  // namespace mammo
