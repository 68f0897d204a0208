#include <cmath>

#include "doctest.h"
#include "mammo/errors.hpp"
#include "mammo/metrics.hpp"
#include "oracles.hpp"

using namespace mammo;

namespace {

ConfusionMatrix cmOf(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) { return {tp, tn, fp, fn}; }

ConfusionMatrix randomCm(Rng& rng, std::uint64_t maxCount, bool positiveMargins) {
    std::uniform_int_distribution<std::uint64_t> d(positiveMargins ? 1 : 0, maxCount);
    return {d(rng), d(rng), d(rng), d(rng)};
}

}  // namespace

TEST_CASE("confusion matrix from predictions") {
    const std::vector<int> a{1, 0, 1};
    CHECK(confusionFromPredictions(a, a) == cmOf(2, 1, 0, 0));

    std::vector<int> actual(100, 0), predicted(100, 0);
    std::fill(actual.begin() + 90, actual.end(), 1);
    const auto cm = confusionFromPredictions(predicted, actual);
    CHECK(cm == cmOf(0, 90, 0, 10));
    CHECK(accuracy(cm) == doctest::Approx(0.90).epsilon(1e-15));

    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<int> p(1 + rng() % 30), y(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<int>(rng() % 2);
            y[i] = static_cast<int>(rng() % 2);
        }
        ConfusionMatrix ref;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] == 1 && y[i] == 1) ++ref.tp;
            if (p[i] == 0 && y[i] == 0) ++ref.tn;
            if (p[i] == 1 && y[i] == 0) ++ref.fp;
            if (p[i] == 0 && y[i] == 1) ++ref.fn;
        }
        CHECK(confusionFromPredictions(p, y) == ref);
    }
    CHECK_THROWS_AS(confusionFromPredictions(std::vector<int>{1}, std::vector<int>{1, 0}), ContractError);
    CHECK_THROWS_AS(confusionFromPredictions(std::vector<int>{}, std::vector<int>{}), ContractError);
}

TEST_CASE("accuracy recall specificity precision") {
    CHECK(accuracy(cmOf(3, 5, 1, 1)) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(accuracy(cmOf(4, 6, 0, 0)) == 1.0);
    CHECK(recall(cmOf(1, 0, 0, 9)) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(specificity(cmOf(0, 90, 0, 0)) == 1.0);
    std::set<std::string> flags;
    CHECK(precision(cmOf(0, 5, 0, 5), &flags) == 0.0);
    CHECK(flags.count(metric::kPrecision) == 1);
    CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), ContractError);
}

TEST_CASE("F-beta") {
    CHECK(fbeta(cmOf(5, 5, 0, 0), 2.0) == 1.0);
    CHECK(fbeta(cmOf(5, 5, 0, 0), 0.3) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fbeta(cmOf(1, 0, 1, 1), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    // P = 3/12 = 0.25, R = 3/4 = 0.75: 5 P R / (4 P + R) = 0.9375 / 1.75.
    CHECK(fbeta(cmOf(3, 0, 9, 1), 2.0) == doctest::Approx(0.9375 / 1.75).epsilon(1e-14));
    CHECK(fbeta(cmOf(3, 0, 9, 1), 2.0) == doctest::Approx(0.535714).epsilon(1e-6));
    std::set<std::string> flags;
    CHECK(fbeta(cmOf(0, 5, 0, 3), 2.0, &flags) == 0.0);
    CHECK(flags.count(metric::kF2) == 1);
    CHECK_THROWS_AS(fbeta(cmOf(1, 1, 1, 1), 0.0), ContractError);
    CHECK_THROWS_AS(fbeta(cmOf(1, 1, 1, 1), -1.0), ContractError);
}

TEST_CASE("balanced accuracy and G-Mean") {
    // recall 0.1, specificity 1.0
    const auto cm = cmOf(1, 90, 0, 9);
    CHECK(balancedAccuracy(cm) == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(gMean(cm) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-15));
    CHECK(gMean(cm) == doctest::Approx(0.3162).epsilon(5e-5 / 0.3162));
    // The two-decimal figure 0.31 is a truncation; rounding would give 0.32.
    CHECK(std::floor(gMean(cm) * 100) / 100 == 0.31);
    CHECK(gMean(cmOf(3, 3, 0, 0)) == 1.0);
    CHECK(balancedAccuracy(cmOf(3, 3, 0, 0)) == 1.0);
    // R = 0.5, S = 18/25 = 0.72
    const auto c2 = cmOf(1, 18, 7, 1);
    CHECK(balancedAccuracy(c2) == doctest::Approx(0.61).epsilon(1e-15));
    CHECK(gMean(c2) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("metric properties over random matrices") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto cm = randomCm(rng, 60, true);
        const MetricReport r = evaluateMetrics(cm);
        const auto ref = oracle::metricsByFormula(cm.tp, cm.tn, cm.fp, cm.fn);
        CHECK(std::abs(r.accuracy - ref.accuracy) <= 1e-12);
        CHECK(std::abs(r.f2 - ref.f2) <= 1e-12);
        CHECK(r.degenerateFlags.empty());
        // AM-GM
        CHECK(r.gMean <= r.balancedAccuracy + 1e-15);
        if (r.recall == r.specificity) CHECK(std::abs(r.gMean - r.balancedAccuracy) <= 1e-15);
        CHECK(std::abs(r.gMean * r.gMean - r.recall * r.specificity) <= 1e-9);
        // Accuracy as the prior-weighted mix of recall and specificity.
        const double n = static_cast<double>(cm.total());
        const double mix = (cm.tp + cm.fn) / n * r.recall + (cm.tn + cm.fp) / n * r.specificity;
        CHECK(std::abs(r.accuracy - mix) <= 1e-12);
        // F1 is the harmonic mean of precision and recall.
        CHECK(std::abs(fbeta(cm, 1.0) - 2 * r.precision * r.recall / (r.precision + r.recall)) <= 1e-12);
        // Scale invariance.
        const std::uint64_t k = 1 + rng() % 9;
        const MetricReport s = evaluateMetrics({cm.tp * k, cm.tn * k, cm.fp * k, cm.fn * k});
        for (const auto& name : metricNames()) CHECK(std::abs(s.get(name) - r.get(name)) <= 1e-12);
        for (const auto& name : metricNames()) {
            CHECK(r.get(name) >= 0.0);
            CHECK(r.get(name) <= 1.0);
        }
    }
}

TEST_CASE("degenerate flags are reported by evaluateMetrics") {
    const MetricReport r = evaluateMetrics(cmOf(0, 10, 0, 0));
    CHECK(r.degenerateFlags.count(metric::kRecall) == 1);
    CHECK(r.degenerateFlags.count(metric::kPrecision) == 1);
    CHECK(r.recall == 0.0);
    CHECK(r.specificity == 1.0);
    CHECK_THROWS_AS(r.get("auroc"), ContractError);
}

TEST_CASE("aggregate uses the sample standard deviation") {
    std::vector<MetricReport> same(4, evaluateMetrics(cmOf(3, 5, 1, 1)));
    for (const auto& s : aggregate(same)) CHECK(s.std == 0.0);

    const double vals[] = {0.4, 0.6};
    const auto [m, sd] = meanAndSampleStd(vals);
    CHECK(m == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sd == doctest::Approx(std::sqrt(0.02)).epsilon(1e-14));
    CHECK(sd == doctest::Approx(0.1414).epsilon(1e-4));

    const double one[] = {0.3};
    CHECK(meanAndSampleStd(one).second == 0.0);

    Rng rng(9);
    std::vector<MetricReport> reports;
    for (int i = 0; i < 10; ++i) reports.push_back(evaluateMetrics(randomCm(rng, 40, true)));
    const auto agg = aggregate(reports);
    REQUIRE(agg.size() == metricNames().size());
    for (std::size_t k = 0; k < agg.size(); ++k) {
        CHECK(agg[k].metric == metricNames()[k]);
        double mean = 0.0;
        for (const auto& r : reports) mean += r.get(agg[k].metric);
        mean /= 10.0;
        double ss = 0.0;
        for (const auto& r : reports) ss += (r.get(agg[k].metric) - mean) * (r.get(agg[k].metric) - mean);
        CHECK(agg[k].mean == doctest::Approx(mean).epsilon(1e-13));
        CHECK(agg[k].std == doctest::Approx(std::sqrt(ss / 9.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(aggregate(std::vector<MetricReport>{}), ContractError);
}
