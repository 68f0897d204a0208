#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mammo/dedims.hpp"
#include "mammo/errors.hpp"
#include "mammo/synth.hpp"
#include "oracles.hpp"

using namespace mammo;

namespace {

// Straight-line version of the per-feature sorted-column cosine sum.
double dissimilarityByFormula(const Matrix& a, const Matrix& b) {
    double total = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < a.rows; ++i) {
            x.push_back(a(i, j));
            y.push_back(b(i, j));
        }
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        double dot = 0, nx = 0, ny = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dot += x[i] * y[i];
            nx += x[i] * x[i];
            ny += y[i] * y[i];
        }
        if (nx == 0 || ny == 0) continue;
        total += 1.0 - dot / std::sqrt(nx * ny);
    }
    return total;
}

Matrix permuteRows(const Matrix& m, Rng& rng) {
    std::vector<std::size_t> order(m.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(order[i], j);
    }
    return out;
}

ModelParams referenceNet(int side, std::uint64_t seed, int width = 16) {
    ClassifierConfig c;
    c.inputHeight = side;
    c.inputWidth = side;
    c.hiddenSizes = {width};
    c.seed = seed;
    return initModel(c);
}

std::vector<GrayImage> uniformImages(std::size_t n, int side, double lo, double hi, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<GrayImage> out;
    for (std::size_t i = 0; i < n; ++i) {
        GrayImage g(side, side);
        for (auto& v : g.pixels) v = u(rng);
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

TEST_CASE("cosineDistance examples") {
    const std::vector<double> a{1.0, 2.0, -3.0};
    CHECK(cosineDistance(a, a) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cosineDistance(std::vector<double>{1, 0}, std::vector<double>{0, 3}) == doctest::Approx(1.0));
    CHECK(cosineDistance(std::vector<double>{1, 0}, std::vector<double>{-1, 0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(cosineDistance(std::vector<double>{0, 0}, std::vector<double>{1, 0}), ContractError);
    CHECK_THROWS_AS(cosineDistance(std::vector<double>{1}, std::vector<double>{1, 0}), ContractError);
}

TEST_CASE("featureDissimilarity examples and oracle") {
    Rng rng(5);
    const Matrix a = oracle::randomMatrix(12, 7, rng);
    const Matrix b = oracle::randomMatrix(12, 7, rng);
    CHECK(std::abs(featureDissimilarity(a, a)) <= 1e-9);
    CHECK(featureDissimilarity(a, b) == featureDissimilarity(b, a));
    CHECK(featureDissimilarity(a, b) == doctest::Approx(dissimilarityByFormula(a, b)).epsilon(1e-12));

    // Columns v and -v: in raw order any positive v gives distance 2 per
    // column; after sorting this holds when v is constant.
    constexpr std::size_t F = 5;
    Matrix pos(4, F), neg(4, F), flat(4, F, 1.5), flatNeg(4, F, -1.5);
    const double v[4] = {1.0, 3.0, 2.0, 0.5};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < F; ++j) {
            pos(i, j) = v[i] * static_cast<double>(j + 1);
            neg(i, j) = -pos(i, j);
        }
    }
    CHECK(featureDissimilarity(pos, neg, DissimilarityOptions{true}) == doctest::Approx(2.0 * F).epsilon(1e-12));
    CHECK(featureDissimilarity(flat, flatNeg) == doctest::Approx(2.0 * F).epsilon(1e-12));
    CHECK(featureDissimilarity(pos, neg) == doctest::Approx(dissimilarityByFormula(pos, neg)).epsilon(1e-12));

    Matrix withZero = a;
    for (std::size_t i = 0; i < withZero.rows; ++i) withZero(i, 3) = 0.0;
    CHECK(std::isfinite(featureDissimilarity(withZero, b)));
    CHECK(featureDissimilarity(withZero, b) == doctest::Approx(dissimilarityByFormula(withZero, b)).epsilon(1e-12));

    CHECK_THROWS_AS(featureDissimilarity(a, Matrix(12, 6)), ContractError);
    CHECK_THROWS_AS(featureDissimilarity(Matrix(1, 3, 1.0), Matrix(1, 3, 1.0)), ContractError);
}

TEST_CASE("featureDissimilarity ignores row order; raw order does not") {
    Rng rng(8);
    const Matrix a = oracle::randomMatrix(20, 6, rng);
    const Matrix b = oracle::randomMatrix(20, 6, rng);
    const double base = featureDissimilarity(a, b);
    for (int t = 0; t < 100; ++t) {
        CHECK(featureDissimilarity(permuteRows(a, rng), b) == doctest::Approx(base).epsilon(1e-12));
        CHECK(featureDissimilarity(a, permuteRows(b, rng)) == doctest::Approx(base).epsilon(1e-12));
    }
    const DissimilarityOptions raw{true};
    CHECK(featureDissimilarity(a, a, raw) == doctest::Approx(0.0));
    CHECK(featureDissimilarity(a, permuteRows(a, rng), raw) > 1e-3);
}

TEST_CASE("dedims same data, determinism and errors") {
    const auto net = referenceNet(8, 3);
    const auto source = FeatureSource::penultimate(net);
    CHECK(source.featureDim == 16);
    const auto imgs = uniformImages(30, 8, 0.0, 1.0, 9);

    // A batch equal to the whole dataset is the same multiset on both sides.
    Rng rng(1);
    const auto same = dedims(source, imgs, imgs, rng, 4, imgs.size());
    REQUIRE(same.perBatch.size() == 4);
    for (double d : same.perBatch) CHECK(std::abs(d) <= 1e-9);
    CHECK(same.batches == 4);
    CHECK(same.batchSize == 30);

    Rng r1(2), r2(2);
    const auto x = dedims(source, imgs, imgs, r1, 5, 10);
    const auto y = dedims(source, imgs, imgs, r2, 5, 10);
    CHECK(x.perBatch == y.perBatch);
    CHECK(x.mean == y.mean);
    CHECK(x.std == y.std);

    double mean = 0.0;
    for (double d : x.perBatch) mean += d / 5.0;
    double var = 0.0;
    for (double d : x.perBatch) var += (d - mean) * (d - mean) / 4.0;
    CHECK(x.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(x.std == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

    Rng r3(3);
    CHECK_THROWS_AS(dedims(source, imgs, uniformImages(9, 8, 0, 1, 1), r3, 2, 10), DataError);
}

TEST_CASE("an intensity shift raises dedims above the same-dataset baseline") {
    const auto source = FeatureSource::penultimate(referenceNet(8, 4));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto a = uniformImages(80, 8, 0.0, 0.6, 100 + seed);
        const auto a2 = uniformImages(80, 8, 0.0, 0.6, 200 + seed);
        auto shifted = a2;
        for (auto& img : shifted) {
            for (auto& v : img.pixels) v += 0.3;
        }
        Rng r1(seed), r2(seed);
        const auto baseline = dedims(source, a, a2, r1);
        const auto moved = dedims(source, a, shifted, r2);
        CHECK(moved.mean > baseline.mean);
    }
}

TEST_CASE("dedims grows with synthetic domain shift") {
    int monotone = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SyntheticSpec spec;
        spec.nPatients = 30;
        spec.imagesPerPatient = 3.0;
        spec.size = 24;
        spec.seed = 1000 + seed;
        const auto ref = generateSynthetic(spec);
        // A wide random feature bank; with 16 units roughly one seed in seven
        // has a feature set that is blind to one of the steps.
        const auto source = FeatureSource::penultimate(referenceNet(24, 50 + seed, 256));
        double prev = -1.0;
        bool ok = true;
        for (double shift : {0.2, 0.5, 0.8}) {
            SyntheticSpec s = spec;
            s.domainShift = shift;
            s.seed = 2000 + seed;
            const auto other = generateSynthetic(s);
            Rng rng(seed);
            const double m = dedims(source, ref.images, other.images, rng).mean;
            ok = ok && m > prev;
            prev = m;
        }
        monotone += ok ? 1 : 0;
    }
    MESSAGE("monotone seeds: " << monotone << "/10");
    CHECK(monotone >= 9);
}
