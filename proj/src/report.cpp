#include "mammo/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "mammo/errors.hpp"

namespace mammo {

namespace {

std::vector<double> metricValues(const RunResult& r, const std::string& metric) {
    std::vector<double> v;
    for (const auto& rep : r.perSubsetReports) v.push_back(rep.get(metric));
    return v;
}

std::string fixed(double v, const char* fmt) {
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

const Comparison* findComparison(const std::vector<Comparison>& comparisons, const RunResult& r, const std::string& metric) {
    const std::string name(toString(r.config.configuration));
    for (const auto& c : comparisons) {
        if (c.configA == name && c.nLabeled == r.config.nLabeled && c.metric == metric) return &c;
    }
    return nullptr;
}

struct Row {
    const RunResult* run;
    std::string metric;
    double mean, std;
    const Comparison* comparison;
};

std::vector<Row> reportRows(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                            const ReportOptions& options) {
    if (results.empty()) throw ContractError("report needs at least one run");
    std::vector<std::size_t> budgets;
    for (const auto& r : results) budgets.push_back(r.config.nLabeled);
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());

    std::vector<Row> rows;
    for (auto n : budgets) {
        for (const auto& m : options.metrics) {
            for (const auto& r : results) {
                if (r.config.nLabeled != n) continue;
                const auto values = metricValues(r, m);
                const auto [mean, sd] = meanAndSampleStd(values);
                rows.push_back({&r, m, mean, sd, findComparison(comparisons, r, m)});
            }
        }
    }
    return rows;
}

}  // namespace

std::vector<Comparison> compareRuns(const std::vector<RunResult>& results, Configuration a, Configuration b,
                                    const std::vector<std::string>& metrics, Alternative alternative) {
    std::vector<Comparison> out;
    for (const auto& ra : results) {
        if (ra.config.configuration != a) continue;
        for (const auto& rb : results) {
            if (rb.config.configuration != b || rb.config.nLabeled != ra.config.nLabeled) continue;
            if (ra.perSubsetReports.size() != rb.perSubsetReports.size()) {
                throw DataError("compared runs have different subset counts");
            }
            for (const auto& m : metrics) {
                Comparison c{std::string(toString(a)), std::string(toString(b)), ra.config.nLabeled, m, std::nullopt};
                const PairedSample sample{metricValues(ra, m), metricValues(rb, m)};
                if (std::any_of(sample.a.begin(), sample.a.end(),
                                [&, k = std::size_t{0}](double v) mutable { return v != sample.b[k++]; })) {
                    c.result = wilcoxonSignedRank(sample, alternative);
                }
                out.push_back(std::move(c));
            }
            break;
        }
    }
    return out;
}

std::string reportCsv(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                      const ReportOptions& options) {
    std::string out = "config,source,n_labels,metric,mean,std,p_value,mark\n";
    for (const auto& row : reportRows(results, comparisons, options)) {
        std::string p, mark;
        if (row.comparison) {
            if (row.comparison->result) {
                p = fixed(row.comparison->result->pValue, "%.6g");
                if (row.comparison->result->pValue < options.significanceLevel) mark = "*";
            } else {
                p = "NA";
            }
        }
        out += std::string(toString(row.run->config.configuration)) + ',' + row.run->sourceName + ',' +
               std::to_string(row.run->config.nLabeled) + ',' + row.metric + ',' + fixed(row.mean, "%.6f") + ',' +
               fixed(row.std, "%.6f") + ',' + p + ',' + mark + '\n';
    }
    return out;
}

std::string reportJson(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                       const ReportOptions& options) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : reportRows(results, comparisons, options)) {
        nlohmann::json j = {{"config", toString(row.run->config.configuration)},
                            {"source", row.run->sourceName},
                            {"n_labels", row.run->config.nLabeled},
                            {"metric", row.metric},
                            {"mean", row.mean},
                            {"std", row.std},
                            {"per_subset", metricValues(*row.run, row.metric)}};
        if (row.comparison && row.comparison->result) {
            j["p_value"] = row.comparison->result->pValue;
            j["significant"] = row.comparison->result->pValue < options.significanceLevel;
        }
        rows.push_back(std::move(j));
    }
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : comparisons) {
        nlohmann::json j = {{"a", c.configA}, {"b", c.configB}, {"n_labels", c.nLabeled}, {"metric", c.metric}};
        if (c.result) {
            j["w"] = c.result->wStatistic;
            j["p_value"] = c.result->pValue;
            j["n_effective"] = c.result->nEffective;
            j["method"] = toString(c.result->method);
            j["alternative"] = toString(c.result->alternative);
        } else {
            j["p_value"] = nullptr;
        }
        comps.push_back(std::move(j));
    }
    nlohmann::json doc = {{"significance_level", options.significanceLevel}, {"rows", rows}, {"comparisons", comps}};
    return doc.dump(2) + '\n';
}

void emitReport(const std::vector<RunResult>& results, const std::vector<Comparison>& comparisons,
                const std::filesystem::path& prefix, const ReportOptions& options) {
    const std::string csv = reportCsv(results, comparisons, options);
    const std::string json = reportJson(results, comparisons, options);
    for (const auto& [ext, text] : {std::pair{".csv", &csv}, std::pair{".json", &json}}) {
        const std::filesystem::path path = prefix.string() + ext;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out << *text;
        if (!out) throw IoError("failed writing " + path.string());
    }
}

SuiteResult runSuite(const SuiteSpec& spec, const ExperimentData& data) {
    SuiteResult out;
    PretrainCache cache;
    for (auto n : spec.nLabeled) {
        for (auto c : spec.configurations) {
            ExperimentConfig cfg = spec.base;
            cfg.configuration = c;
            cfg.nLabeled = n;
            out.runs.push_back(runConfiguration(cfg, data, &cache));
        }
    }
    out.comparisons = compareRuns(out.runs, spec.compareA, spec.compareB, spec.metrics, spec.alternative);
    return out;
}

}  // namespace mammo
