#include "mammo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mammo/errors.hpp"

namespace mammo {

const char* toString(Alternative alt) {
    switch (alt) {
        case Alternative::TwoSided: return "two-sided";
        case Alternative::Greater: return "greater";
        case Alternative::Less: return "less";
    }
    return "?";
}

const char* toString(WilcoxonMethod m) { return m == WilcoxonMethod::Exact ? "exact" : "normal-approx"; }

Alternative parseAlternative(const std::string& text) {
    if (text == "two-sided") return Alternative::TwoSided;
    if (text == "greater") return Alternative::Greater;
    if (text == "less") return Alternative::Less;
    throw ContractError("unknown alternative '" + text + "' (expected two-sided, greater or less)");
}

std::vector<double> midRanks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Null distribution of 2W: counts[s] = number of sign patterns whose doubled
// positive rank sum equals s. Doubled ranks are integers even with mid-ranks.
std::vector<double> doubledRankSumCounts(std::span<const long> doubledRanks) {
    const long total = std::accumulate(doubledRanks.begin(), doubledRanks.end(), 0L);
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : doubledRanks) {
        reach += r;
        for (long s = reach; s >= r; --s) counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - r)];
    }
    return counts;
}

double upperNormal(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxonSignedRank(const PairedSample& sample, Alternative alternative) {
    if (sample.a.size() != sample.b.size()) throw ContractError("paired sample sides differ in length");
    if (sample.a.empty()) throw ContractError("paired sample is empty");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < sample.a.size(); ++i) {
        const double d = sample.a[i] - sample.b[i];
        if (!std::isfinite(d)) throw DataError("paired sample contains non-finite values");
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw DataError("degenerate sample: all paired differences are zero");

    std::vector<double> magnitudes(diffs.size());
    std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
    const std::vector<double> ranks = midRanks(magnitudes);

    WilcoxonResult res;
    res.alternative = alternative;
    res.nEffective = diffs.size();
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0.0) res.wStatistic += ranks[i];
    }

    double pGreater = 1.0, pLess = 1.0;
    const auto n = static_cast<double>(res.nEffective);
    if (res.nEffective <= kWilcoxonExactLimit) {
        res.method = WilcoxonMethod::Exact;
        std::vector<long> doubled(ranks.size());
        std::transform(ranks.begin(), ranks.end(), doubled.begin(), [](double r) { return std::lround(2.0 * r); });
        const auto counts = doubledRankSumCounts(doubled);
        const auto observed = static_cast<std::size_t>(std::lround(2.0 * res.wStatistic));
        const double patterns = std::ldexp(1.0, static_cast<int>(res.nEffective));
        double atLeast = 0.0, atMost = 0.0;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            if (s >= observed) atLeast += counts[s];
            if (s <= observed) atMost += counts[s];
        }
        pGreater = atLeast / patterns;
        pLess = atMost / patterns;
    } else {
        res.method = WilcoxonMethod::NormalApprox;
        const double mean = n * (n + 1.0) / 4.0;
        double tieTerm = 0.0;
        std::vector<double> sorted = magnitudes;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const auto t = static_cast<double>(j - i);
            tieTerm += t * t * t - t;
            i = j;
        }
        const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tieTerm / 48.0;
        const double sd = std::sqrt(var);
        pGreater = upperNormal((res.wStatistic - mean - 0.5) / sd);
        pLess = 1.0 - upperNormal((res.wStatistic - mean + 0.5) / sd);
    }

    switch (alternative) {
        case Alternative::Greater: res.pValue = pGreater; break;
        case Alternative::Less: res.pValue = pLess; break;
        case Alternative::TwoSided: res.pValue = std::min(1.0, 2.0 * std::min(pGreater, pLess)); break;
    }
    res.pValue = std::clamp(res.pValue, 0.0, 1.0);
    return res;
}

}  // namespace mammo
