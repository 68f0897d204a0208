#include "mammo/metrics.hpp"

#include <cmath>

#include "mammo/errors.hpp"

namespace mammo {

const std::vector<std::string>& metricNames() {
    static const std::vector<std::string> names{metric::kGMean,    metric::kF2,          metric::kAccuracy,
                                                metric::kRecall,   metric::kSpecificity, metric::kPrecision,
                                                metric::kBalancedAccuracy};
    return names;
}

double MetricReport::get(const std::string& name) const {
    if (name == metric::kAccuracy) return accuracy;
    if (name == metric::kRecall) return recall;
    if (name == metric::kSpecificity) return specificity;
    if (name == metric::kPrecision) return precision;
    if (name == metric::kF2) return f2;
    if (name == metric::kGMean) return gMean;
    if (name == metric::kBalancedAccuracy) return balancedAccuracy;
    throw ContractError("unknown metric '" + name + "'");
}

ConfusionMatrix confusionFromPredictions(std::span<const int> predicted, std::span<const int> actual,
                                         int positiveLabel) {
    if (predicted.size() != actual.size()) throw ContractError("prediction and label counts differ");
    if (predicted.empty()) throw ContractError("cannot build a confusion matrix from an empty sample");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == positiveLabel;
        const bool a = actual[i] == positiveLabel;
        if (p && a) ++cm.tp;
        else if (!p && !a) ++cm.tn;
        else if (p) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const char* name, std::set<std::string>* flags) {
    if (den == 0) {
        if (flags) flags->insert(name);
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ContractError("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

double recall(const ConfusionMatrix& cm, std::set<std::string>* flags) {
    return ratio(cm.tp, cm.tp + cm.fn, metric::kRecall, flags);
}

double specificity(const ConfusionMatrix& cm, std::set<std::string>* flags) {
    return ratio(cm.tn, cm.tn + cm.fp, metric::kSpecificity, flags);
}

double precision(const ConfusionMatrix& cm, std::set<std::string>* flags) {
    return ratio(cm.tp, cm.tp + cm.fp, metric::kPrecision, flags);
}

double fbeta(const ConfusionMatrix& cm, double beta, std::set<std::string>* flags) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ContractError("fbeta requires beta > 0");
    std::set<std::string> local;
    const double p = precision(cm, &local);
    const double r = recall(cm, &local);
    const double b2 = beta * beta;
    const double den = b2 * p + r;
    if (den == 0.0) {
        if (flags) flags->insert(beta == 2.0 ? metric::kF2 : "fbeta");
        return 0.0;
    }
    return (1.0 + b2) * p * r / den;
}

double balancedAccuracy(const ConfusionMatrix& cm, std::set<std::string>* flags) {
    return (recall(cm, flags) + specificity(cm, flags)) / 2.0;
}

double gMean(const ConfusionMatrix& cm, std::set<std::string>* flags) {
    return std::sqrt(recall(cm, flags) * specificity(cm, flags));
}

MetricReport evaluateMetrics(const ConfusionMatrix& cm) {
    MetricReport r;
    r.accuracy = accuracy(cm);
    r.recall = recall(cm, &r.degenerateFlags);
    r.specificity = specificity(cm, &r.degenerateFlags);
    r.precision = precision(cm, &r.degenerateFlags);
    r.f2 = fbeta(cm, 2.0, &r.degenerateFlags);
    r.balancedAccuracy = (r.recall + r.specificity) / 2.0;
    r.gMean = std::sqrt(r.recall * r.specificity);
    return r;
}

std::pair<double, double> meanAndSampleStd(std::span<const double> values) {
    if (values.empty()) throw ContractError("cannot summarise an empty sequence");
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0))};
}

std::vector<MetricSummary> aggregate(std::span<const MetricReport> reports) {
    if (reports.empty()) throw ContractError("aggregate needs at least one report");
    std::vector<MetricSummary> out;
    std::vector<double> values(reports.size());
    for (const auto& name : metricNames()) {
        for (std::size_t i = 0; i < reports.size(); ++i) values[i] = reports[i].get(name);
        const auto [mean, sd] = meanAndSampleStd(values);
        out.push_back({name, mean, sd});
    }
    return out;
}

}  // namespace mammo
