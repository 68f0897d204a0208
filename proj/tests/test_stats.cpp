#include <cmath>
#include <random>

#include "doctest.h"
#include "mammo/errors.hpp"
#include "mammo/rng.hpp"
#include "mammo/stats.hpp"

using namespace mammo;

namespace {

struct BruteForce {
    double w = 0.0;
    double pGreater = 0.0;
    double pLess = 0.0;
    std::size_t n = 0;
};

// Enumerates every sign assignment over the nonzero differences. Ranks are
// computed by counting, independently of midRanks().
BruteForce enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    }
    BruteForce out;
    out.n = d.size();
    std::vector<double> rank(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        double below = 0, equal = 0;
        for (double e : d) {
            if (std::abs(e) < std::abs(d[i])) ++below;
            if (std::abs(e) == std::abs(d[i])) ++equal;
        }
        rank[i] = below + (equal + 1.0) / 2.0;
        if (d[i] > 0) out.w += rank[i];
    }
    const std::uint64_t patterns = std::uint64_t{1} << d.size();
    double ge = 0, le = 0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (mask >> i & 1U) w += rank[i];
        }
        if (w >= out.w - 1e-9) ++ge;
        if (w <= out.w + 1e-9) ++le;
    }
    out.pGreater = ge / static_cast<double>(patterns);
    out.pLess = le / static_cast<double>(patterns);
    return out;
}

PairedSample randomSample(std::size_t n, Rng& rng, bool coarse) {
    std::normal_distribution<double> z(0.0, 1.0);
    PairedSample s;
    for (std::size_t i = 0; i < n; ++i) {
        double x = z(rng), y = z(rng) + 0.2;
        // Coarse values create ties and zero differences.
        if (coarse) {
            x = std::round(x * 2.0) / 2.0;
            y = std::round(y * 2.0) / 2.0;
        }
        s.a.push_back(x);
        s.b.push_back(y);
    }
    return s;
}

}  // namespace

TEST_CASE("midRanks") {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 3.0};
    const auto r = midRanks(v);
    CHECK(r == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
}

TEST_CASE("exact p-values equal full enumeration") {
    Rng rng(12345);
    std::uniform_int_distribution<std::size_t> size(1, 12);
    std::bernoulli_distribution coarse(0.4);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = randomSample(size(rng), rng, coarse(rng));
        const auto bf = enumerate(s.a, s.b);
        if (bf.n == 0) {
            CHECK_THROWS_AS(wilcoxonSignedRank(s), DataError);
            continue;
        }
        ++checked;
        const auto g = wilcoxonSignedRank(s, Alternative::Greater);
        const auto l = wilcoxonSignedRank(s, Alternative::Less);
        const auto t = wilcoxonSignedRank(s, Alternative::TwoSided);
        CHECK((g.method == WilcoxonMethod::Exact));
        CHECK(g.nEffective == bf.n);
        CHECK(std::abs(g.wStatistic - bf.w) <= 1e-12);
        CHECK(std::abs(g.pValue - bf.pGreater) <= 1e-12);
        CHECK(std::abs(l.pValue - bf.pLess) <= 1e-12);
        CHECK(std::abs(t.pValue - std::min(1.0, 2.0 * std::min(bf.pGreater, bf.pLess))) <= 1e-12);
    }
    CHECK(checked > 900);
}

TEST_CASE("worked examples") {
    const PairedSample allPos{{1.1, 2.3, 3.6, 4.0, 5.5}, {1.0, 2.0, 3.0, 3.0, 3.0}};
    const auto g = wilcoxonSignedRank(allPos, Alternative::Greater);
    CHECK(g.pValue == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK(g.wStatistic == 15.0);
    CHECK(g.nEffective == 5);

    const PairedSample single{{1.0, 2.0, 3.0, 4.5}, {1.0, 2.0, 3.0, 4.0}};
    const auto one = wilcoxonSignedRank(single, Alternative::TwoSided);
    CHECK(one.nEffective == 1);
    CHECK(one.pValue == 1.0);

    const PairedSample zeros{{1.0, 2.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(wilcoxonSignedRank(zeros), DataError);
    CHECK_THROWS_AS(wilcoxonSignedRank(PairedSample{{1.0}, {1.0, 2.0}}), ContractError);
    CHECK_THROWS_AS(wilcoxonSignedRank(PairedSample{{NAN}, {1.0}}), DataError);
}

TEST_CASE("swapping the pair mirrors W and the one-sided p-values") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = randomSample(9, rng, trial % 2 == 0);
        const PairedSample swapped{s.b, s.a};
        if (enumerate(s.a, s.b).n == 0) continue;
        const auto g = wilcoxonSignedRank(s, Alternative::Greater);
        const auto sg = wilcoxonSignedRank(swapped, Alternative::Greater);
        const auto sl = wilcoxonSignedRank(swapped, Alternative::Less);
        const double n = static_cast<double>(g.nEffective);
        CHECK(sg.wStatistic == doctest::Approx(n * (n + 1) / 2 - g.wStatistic).epsilon(1e-12));
        CHECK(sl.pValue == doctest::Approx(g.pValue).epsilon(1e-12));
        CHECK(sg.pValue == doctest::Approx(wilcoxonSignedRank(s, Alternative::Less).pValue).epsilon(1e-12));
    }
}

TEST_CASE("exact one-sided p is a multiple of 2^-n without ties") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = randomSample(10, rng, false);
        const auto g = wilcoxonSignedRank(s, Alternative::Greater);
        const double scaled = g.pValue * std::ldexp(1.0, static_cast<int>(g.nEffective));
        CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
        CHECK(g.pValue >= 0.0);
        CHECK(g.pValue <= 1.0);
    }
}

TEST_CASE("adding a constant to a never lowers W") {
    Rng rng(13);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        PairedSample s;
        for (int i = 0; i < 8; ++i) {
            s.b.push_back(u(rng));
            s.a.push_back(s.b.back() + u(rng));
        }
        const auto before = wilcoxonSignedRank(s, Alternative::Greater);
        for (auto& v : s.a) v += 0.25;
        const auto after = wilcoxonSignedRank(s, Alternative::Greater);
        CHECK(after.wStatistic >= before.wStatistic);
        CHECK(after.pValue <= before.pValue);
    }
}

TEST_CASE("normal approximation beyond the exact limit") {
    Rng rng(17);
    const auto s = randomSample(kWilcoxonExactLimit + 1, rng, false);
    const auto g = wilcoxonSignedRank(s, Alternative::Greater);
    CHECK((g.method == WilcoxonMethod::NormalApprox));
    CHECK(g.nEffective == 21);

    // Untied: mean n(n+1)/4, variance n(n+1)(2n+1)/24, continuity 0.5.
    const double n = 21.0;
    const double z = (g.wStatistic - n * (n + 1) / 4 - 0.5) / std::sqrt(n * (n + 1) * (2 * n + 1) / 24);
    CHECK(g.pValue == doctest::Approx(0.5 * std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));

    // Close to the exact tail at this size.
    const auto bf = enumerate(s.a, s.b);
    CHECK(std::abs(g.pValue - bf.pGreater) < 0.01);
    const auto t = wilcoxonSignedRank(s, Alternative::TwoSided);
    CHECK(t.pValue <= 1.0);
    CHECK((parseAlternative("greater") == Alternative::Greater));
    CHECK_THROWS_AS(parseAlternative("bigger"), ContractError);
}
