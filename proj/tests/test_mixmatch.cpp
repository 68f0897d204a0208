#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mammo/errors.hpp"
#include "mammo/inference.hpp"
#include "mammo/mixmatch.hpp"
#include "mammo/preprocess.hpp"
#include "oracles.hpp"

using namespace mammo;

namespace {

constexpr int kSide = 8;

ModelParams smallNet(std::uint64_t seed, std::vector<int> hidden = {6}) {
    ClassifierConfig c;
    c.inputHeight = kSide;
    c.inputWidth = kSide;
    c.hiddenSizes = std::move(hidden);
    c.seed = seed;
    return initModel(c);
}

std::vector<GrayImage> randomImages(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GrayImage> out;
    for (std::size_t i = 0; i < n; ++i) {
        GrayImage g(kSide, kSide);
        for (auto& v : g.pixels) v = u(rng);
        out.push_back(std::move(g));
    }
    return out;
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

std::size_t argmaxOf(std::span<const double> p) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> sharpenByFormula(const std::vector<double>& p, double T) {
    std::vector<double> q(p.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (q[i] = std::pow(p[i], 1.0 / T));
    for (auto& v : q) v /= s;
    return q;
}

std::vector<std::vector<double>> oracleProbs(const ModelParams& params, const std::vector<GrayImage>& imgs) {
    return oracle::forwardPass(params, standardizeBatch(imgs)).probs;
}

// Jöhnk's rejection sampler for Beta(a, b).
double johnkBeta(double a, double b, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        const double x = std::pow(u(rng), 1.0 / a);
        const double y = std::pow(u(rng), 1.0 / b);
        if (x + y <= 1.0 && x + y > 0.0) return x / (x + y);
    }
}

std::vector<double> rowOf(const Matrix& m, std::size_t i) {
    auto r = m.row(i);
    return {r.begin(), r.end()};
}

// Replays the draw order of mixMatchBatch using only preprocess primitives and
// straight-line model evaluation.
struct ScriptedMix {
    std::vector<std::vector<double>> labeledImages, unlabeledImages;
    std::vector<std::vector<double>> labeledLabels, unlabeledLabels;
    std::vector<std::vector<double>> guesses;
};

ScriptedMix scriptMixMatch(const LabeledBatch& lb, const std::vector<GrayImage>& ub, const ModelParams& params,
                           const MixMatchConfig& cfg, Rng rng) {
    const std::size_t C = params.numClasses();
    std::vector<GrayImage> augL;
    for (const auto& img : lb.images) augL.push_back(applyAugment(img, drawAugment(cfg.augment, rng)));

    std::vector<std::vector<double>> mean(ub.size(), std::vector<double>(C, 0.0));
    std::vector<GrayImage> firstAug;
    for (int k = 0; k < cfg.K; ++k) {
        std::vector<GrayImage> aug;
        for (const auto& img : ub) aug.push_back(applyAugment(img, drawAugment(cfg.augment, rng)));
        const auto probs = oracleProbs(params, aug);
        for (std::size_t i = 0; i < ub.size(); ++i) {
            for (std::size_t c = 0; c < C; ++c) mean[i][c] += probs[i][c] / cfg.K;
        }
        if (k == 0) firstAug = aug;
    }
    ScriptedMix out;
    for (auto& m : mean) out.guesses.push_back(sharpenByFormula(m, cfg.T));

    std::vector<std::vector<double>> poolImg, poolLab;
    for (std::size_t i = 0; i < augL.size(); ++i) {
        poolImg.push_back(augL[i].pixels);
        std::vector<double> y(C, 0.0);
        y[static_cast<std::size_t>(lb.labels[i])] = 1.0;
        poolLab.push_back(y);
    }
    for (std::size_t j = 0; j < ub.size(); ++j) {
        poolImg.push_back(firstAug[j].pixels);
        poolLab.push_back(out.guesses[j]);
    }
    std::vector<std::size_t> order(poolImg.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::gamma_distribution<double> g(cfg.alpha, 1.0);
    const double x = g(rng);
    const double y = g(rng);
    const double lam = std::max(x / (x + y), y / (x + y));
    auto mix = [&](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = lam * a[i] + (1.0 - lam) * b[i];
        return r;
    };
    const std::size_t nl = augL.size();
    for (std::size_t i = 0; i < poolImg.size(); ++i) {
        auto img = mix(poolImg[i], poolImg[order[i]]);
        auto lab = mix(poolLab[i], poolLab[order[i]]);
        if (i < nl) {
            out.labeledImages.push_back(std::move(img));
            out.labeledLabels.push_back(std::move(lab));
        } else {
            out.unlabeledImages.push_back(std::move(img));
            out.unlabeledLabels.push_back(std::move(lab));
        }
    }
    return out;
}

LabeledBatch labeledBatch(std::size_t n, std::uint64_t seed) {
    LabeledBatch lb;
    lb.images = randomImages(n, seed);
    for (std::size_t i = 0; i < n; ++i) lb.labels.push_back(static_cast<int>(i % 2));
    return lb;
}

}  // namespace

TEST_CASE("sharpen examples") {
    const std::vector<double> p{0.1, 0.6, 0.3};
    const auto id = sharpen(p, 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(id[i] == doctest::Approx(p[i]).epsilon(1e-15));

    for (double T : {0.1, 0.25, 2.0}) {
        const auto h = sharpen(std::vector<double>{0.5, 0.5}, T);
        CHECK(h[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(h[1] == doctest::Approx(0.5).epsilon(1e-15));
    }

    const auto q = sharpen(std::vector<double>{0.8, 0.2}, 0.25);
    const double expected0 = std::pow(0.8, 4) / (std::pow(0.8, 4) + std::pow(0.2, 4));
    CHECK(std::abs(q[0] - 0.99611) <= 1e-5);
    CHECK(std::abs(q[1] - 0.00389) <= 1e-5);
    CHECK(q[0] == doctest::Approx(expected0).epsilon(1e-14));

    CHECK_THROWS_AS(sharpen(std::vector<double>{0.0, 0.0}, 0.25), ContractError);
    CHECK_THROWS_AS(sharpen(std::vector<double>{0.5, 0.5}, 0.0), ContractError);
}

TEST_CASE("sharpen never raises entropy and keeps the argmax") {
    Rng rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> dim(2, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p(static_cast<std::size_t>(dim(rng)));
        double s = 0.0;
        for (auto& v : p) s += (v = u(rng) + 1e-9);
        for (auto& v : p) v /= s;
        const auto q = sharpen(p, 0.25);
        CHECK(entropy(q) <= entropy(p) + 1e-12);
        CHECK(argmaxOf(q) == argmaxOf(p));
        CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("guessLabels degenerate pipelines") {
    const auto params = smallNet(3);
    const auto imgs = randomImages(5, 4);
    const auto raw = oracleProbs(params, imgs);

    Rng r1(9);
    const auto k1 = guessLabels(params, imgs, 1, 1.0, r1, AugmentPolicy::identity());
    for (std::size_t i = 0; i < imgs.size(); ++i) {
        for (std::size_t c = 0; c < 2; ++c) CHECK(k1.softLabels(i, c) == doctest::Approx(raw[i][c]).epsilon(1e-12));
        CHECK(k1.images[i] == imgs[i]);
    }

    Rng r2(9);
    const auto k2 = guessLabels(params, imgs, 2, 0.25, r2, AugmentPolicy::identity());
    for (std::size_t i = 0; i < imgs.size(); ++i) {
        const auto q = sharpenByFormula(raw[i], 0.25);
        for (std::size_t c = 0; c < 2; ++c) CHECK(k2.softLabels(i, c) == doctest::Approx(q[c]).epsilon(1e-12));
    }
}

TEST_CASE("guessLabels with random augmentations matches a scripted recomputation") {
    const auto params = smallNet(5);
    const auto imgs = randomImages(6, 6);
    const AugmentPolicy policy{0.5, 10.0};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng lib(seed);
        const auto got = guessLabels(params, imgs, 2, 0.25, lib, policy);

        Rng rng(seed);
        std::vector<std::vector<GrayImage>> aug(2);
        for (int k = 0; k < 2; ++k) {
            for (const auto& img : imgs) aug[k].push_back(applyAugment(img, drawAugment(policy, rng)));
        }
        const auto p0 = oracleProbs(params, aug[0]);
        const auto p1 = oracleProbs(params, aug[1]);
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            const auto q = sharpenByFormula({(p0[i][0] + p1[i][0]) / 2, (p0[i][1] + p1[i][1]) / 2}, 0.25);
            CHECK(got.softLabels(i, 0) == doctest::Approx(q[0]).epsilon(1e-12));
            CHECK(got.softLabels(i, 1) == doctest::Approx(q[1]).epsilon(1e-12));
            CHECK(got.images[i] == aug[0][i]);
        }
        // Both generators consumed the same number of draws.
        CHECK(lib() == rng());
    }
}

TEST_CASE("mix lambda bounds, reflection and distribution") {
    CHECK(reflectMixLambda(0.3) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(reflectMixLambda(0.7) == doctest::Approx(0.7).epsilon(1e-15));
    Rng tmp(1);
    CHECK_THROWS_AS(sampleMixLambda(0.0, tmp), ContractError);

    Rng rng(2024);
    double sum = 0.0;
    bool inRange = true;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
        const double l = sampleMixLambda(0.75, rng);
        inRange = inRange && l >= 0.5 && l <= 1.0;
        sum += l;
    }
    CHECK(inRange);

    Rng orng(77);
    double osum = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const double l = johnkBeta(0.75, 0.75, orng);
        osum += std::max(l, 1.0 - l);
    }
    CHECK(std::abs(sum / kDraws - osum / kDraws) < 0.01);
}

TEST_CASE("mixUp examples") {
    GrayImage a(2, 1), b(2, 1);
    a.pixels = {0.2, 1.0};
    b.pixels = {0.6, 0.0};
    const SoftExample ea{a, {1.0, 0.0}}, eb{b, {0.0, 1.0}};

    const auto one = mixUp(ea, eb, 1.0);
    CHECK(one.image == a);
    CHECK(one.label == ea.label);

    const auto mid = mixUp(ea, eb, 0.5);
    CHECK(mid.image.pixels[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(mid.image.pixels[1] == doctest::Approx(0.5).epsilon(1e-15));

    const auto seventy = mixUp(ea, eb, 0.7);
    CHECK(seventy.label[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(seventy.label[1] == doctest::Approx(0.3).epsilon(1e-15));

    CHECK_THROWS_AS(mixUp(ea, SoftExample{GrayImage(3, 1), {0.0, 1.0}}, 0.7), ContractError);
    CHECK_THROWS_AS(mixUp(ea, SoftExample{b, {0.0, 0.5, 0.5}}, 0.7), ContractError);
    CHECK_THROWS_AS(mixUp(ea, eb, 0.4), ContractError);
}

TEST_CASE("mixMatchBatch degenerate case returns the inputs") {
    const auto params = smallNet(11);
    const auto lb = labeledBatch(4, 12);
    const auto ub = randomImages(5, 13);
    MixMatchConfig cfg;
    cfg.augment = AugmentPolicy::identity();
    cfg.forcedLambda = 1.0;
    Rng rng(14);
    const auto mixed = mixMatchBatch(lb, ub, params, cfg, rng);
    REQUIRE(mixed.labeled.images.size() == 4);
    REQUIRE(mixed.unlabeled.images.size() == 5);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(mixed.labeled.images[i] == lb.images[i]);
        CHECK(mixed.labeled.softLabels(i, static_cast<std::size_t>(lb.labels[i])) == 1.0);
        CHECK(mixed.labeled.softLabels(i, static_cast<std::size_t>(1 - lb.labels[i])) == 0.0);
    }
    const auto raw = oracleProbs(params, ub);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(mixed.unlabeled.images[j] == ub[j]);
        const auto q = sharpenByFormula(raw[j], cfg.T);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(mixed.unlabeled.softLabels(j, c) == doctest::Approx(q[c]).epsilon(1e-12));
            CHECK(mixed.guessed(j, c) == mixed.unlabeled.softLabels(j, c));
        }
    }
}

TEST_CASE("mixMatchBatch matches a scripted recomputation and is deterministic") {
    const auto params = smallNet(21, {5, 4});
    const auto lb = labeledBatch(5, 22);
    const auto ub = randomImages(7, 23);
    MixMatchConfig cfg;
    for (std::uint64_t seed : {31u, 32u, 33u, 34u}) {
        Rng r1(seed), r2(seed);
        const auto a = mixMatchBatch(lb, ub, params, cfg, r1);
        const auto b = mixMatchBatch(lb, ub, params, cfg, r2);
        CHECK(a.labeled.softLabels.data == b.labeled.softLabels.data);
        CHECK(a.unlabeled.softLabels.data == b.unlabeled.softLabels.data);
        CHECK(a.labeled.images == b.labeled.images);
        CHECK(a.unlabeled.images == b.unlabeled.images);

        const auto s = scriptMixMatch(lb, ub, params, cfg, Rng(seed));
        for (std::size_t i = 0; i < lb.images.size(); ++i) {
            const auto& got = a.labeled.images[i].pixels;
            for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(s.labeledImages[i][k]).epsilon(1e-12));
            for (std::size_t c = 0; c < 2; ++c) {
                CHECK(a.labeled.softLabels(i, c) == doctest::Approx(s.labeledLabels[i][c]).epsilon(1e-12));
            }
        }
        for (std::size_t j = 0; j < ub.size(); ++j) {
            const auto& got = a.unlabeled.images[j].pixels;
            for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(s.unlabeledImages[j][k]).epsilon(1e-12));
            for (std::size_t c = 0; c < 2; ++c) {
                CHECK(a.unlabeled.softLabels(j, c) == doctest::Approx(s.unlabeledLabels[j][c]).epsilon(1e-12));
                CHECK(a.guessed(j, c) == doctest::Approx(s.guesses[j][c]).epsilon(1e-12));
            }
        }
        for (const Matrix* m : {&a.labeled.softLabels, &a.unlabeled.softLabels}) {
            for (std::size_t i = 0; i < m->rows; ++i) {
                const auto r = rowOf(*m, i);
                CHECK(std::accumulate(r.begin(), r.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
    Rng r(1);
    CHECK_THROWS_AS(mixMatchBatch(lb, {}, params, cfg, r), ContractError);
}

TEST_CASE("mixing keeps the argmax of a one-hot first parent") {
    const auto params = smallNet(41);
    MixMatchConfig cfg;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto lb = labeledBatch(6, 100 + seed);
        const auto ub = randomImages(6, 200 + seed);
        Rng rng(seed);
        const auto mixed = mixMatchBatch(lb, ub, params, cfg, rng);
        const auto am = argmaxRows(mixed.labeled.softLabels);
        for (std::size_t i = 0; i < am.size(); ++i) CHECK(am[i] == lb.labels[i]);
    }
}

TEST_CASE("rampup") {
    CHECK(rampup(0, 3000.0) == 0.0);
    CHECK(rampup(1500, 3000.0) == 0.5);
    CHECK(rampup(6000, 3000.0) == 1.0);
    CHECK(rampup(3000) == 1.0);
    CHECK_THROWS_AS(rampup(1, 0.0), ContractError);
}

TEST_CASE("pbcWeights") {
    const std::vector<std::uint64_t> balanced{50, 50}, skewed{95, 5}, empty{40, 0};
    const auto w = pbcWeights(balanced, skewed);
    CHECK(w.labeled.perClass[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.labeled.perClass[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(w.unlabeled.perClass[0] - 0.5263) <= 1e-3);
    CHECK(std::abs(w.unlabeled.perClass[1] - 10.0) <= 1e-3);
    const auto g = pbcWeights(empty, empty);
    CHECK(std::isfinite(g.labeled.perClass[1]));
    CHECK(g.labeled.perClass[1] > 0.0);
    CHECK(g.labeled.perClass[1] == doctest::Approx(20.0).epsilon(1e-15));

    const std::vector<int> labels{0, 1, 1, 0, 0};
    CHECK(countLabels(labels, 2) == std::vector<std::uint64_t>{3, 2});
    Matrix soft(3, 2);
    soft.data = {0.9, 0.1, 0.2, 0.8, 0.6, 0.4};
    CHECK(countArgmax(soft) == std::vector<std::uint64_t>{2, 1});
}

namespace {

MixedBatch handBuiltBatch() {
    MixedBatch m;
    GrayImage a(kSide, kSide), b(kSide, kSide);
    for (int i = 0; i < kSide * kSide; ++i) {
        a.pixels[static_cast<std::size_t>(i)] = static_cast<double>(i % 7) / 7.0;
        b.pixels[static_cast<std::size_t>(i)] = static_cast<double>((i * 5) % 11) / 11.0;
    }
    m.labeled.images = {a};
    m.labeled.softLabels = Matrix(1, 2);
    m.labeled.softLabels.data = {0.8, 0.2};
    m.unlabeled.images = {b};
    m.unlabeled.softLabels = Matrix(1, 2);
    m.unlabeled.softLabels.data = {0.35, 0.65};
    m.guessed = m.unlabeled.softLabels;
    return m;
}

}  // namespace

TEST_CASE("compoundLoss term by term") {
    const auto params = smallNet(51);
    const auto m = handBuiltBatch();
    MixMatchConfig cfg;
    const PbcWeights w{{{0.5263157894736842, 10.0}}, {{2.0, 0.75}}};

    const auto pl = oracleProbs(params, m.labeled.images)[0];
    const auto pu = oracleProbs(params, m.unlabeled.images)[0];
    const double ll = -(0.5263157894736842 * 0.8 * std::log(pl[0]) + 10.0 * 0.2 * std::log(pl[1]));
    // Pseudo-class of [0.35, 0.65] is 1, so the unlabeled weight is 0.75.
    const double lu = 0.75 * ((pu[0] - 0.35) * (pu[0] - 0.35) + (pu[1] - 0.65) * (pu[1] - 0.65));

    for (std::uint64_t step : {0u, 1u, 750u, 1500u, 3000u, 9000u}) {
        const auto got = compoundLoss(params, m, cfg, step, w);
        const double eg = 200.0 * std::min(static_cast<double>(step) / 3000.0, 1.0);
        CHECK(got.supervised == doctest::Approx(ll).epsilon(1e-12));
        CHECK(got.unsupervised == doctest::Approx(lu).epsilon(1e-12));
        CHECK(got.effectiveGamma == doctest::Approx(eg).epsilon(1e-15));
        CHECK(got.loss == doctest::Approx(ll + eg * lu).epsilon(1e-12));
    }
    CHECK(compoundLoss(params, m, cfg, 0, w).loss == compoundLoss(params, m, cfg, 0, w).supervised);

    MixMatchConfig noPbc = cfg;
    noPbc.pbcEnabled = false;
    const PbcWeights uniform{ClassWeights::uniform(2), ClassWeights::uniform(2)};
    CHECK(compoundLoss(params, m, noPbc, 1500, w).loss == compoundLoss(params, m, cfg, 1500, uniform).loss);
}

TEST_CASE("compoundLoss with gamma zero is the supervised term; monotone in step") {
    const auto params = smallNet(61);
    const auto lb = labeledBatch(6, 62);
    const auto ub = randomImages(6, 63);
    MixMatchConfig cfg;
    Rng rng(64);
    const auto mixed = mixMatchBatch(lb, ub, params, cfg, rng);
    const auto w = pbcWeights(countLabels(lb.labels, 2), countArgmax(mixed.guessed));

    MixMatchConfig zero = cfg;
    zero.gamma = 0.0;
    for (std::uint64_t step : {0u, 10u, 5000u}) {
        const auto l = compoundLoss(params, mixed, zero, step, w);
        CHECK(std::abs(l.loss - l.supervised) <= 1e-12);
    }

    double prev = -1.0;
    for (std::uint64_t step : {0u, 1u, 2u, 100u, 1500u, 2999u, 3000u, 3001u, 100000u}) {
        const double l = compoundLoss(params, mixed, cfg, step, w).loss;
        CHECK(l >= prev);
        prev = l;
    }
}

TEST_CASE("compoundLossGradient agrees with central differences") {
    auto params = smallNet(71, {4});
    const auto lb = labeledBatch(3, 72);
    const auto ub = randomImages(3, 73);
    MixMatchConfig cfg;
    cfg.gamma = 2.0;
    Rng rng(74);
    const auto mixed = mixMatchBatch(lb, ub, params, cfg, rng);
    const PbcWeights w{{{0.6, 3.0}}, {{1.5, 0.75}}};
    const std::uint64_t step = 1200;
    const auto g = compoundLossGradient(params, mixed, cfg, step, w).grads;

    const double eps = 1e-5;
    double worst = 0.0;
    auto probe = [&](double& slot, double analytic) {
        const double keep = slot;
        slot = keep + eps;
        const double up = compoundLoss(params, mixed, cfg, step, w).loss;
        slot = keep - eps;
        const double down = compoundLoss(params, mixed, cfg, step, w).loss;
        slot = keep;
        const double numeric = (up - down) / (2 * eps);
        worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4}));
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        for (std::size_t k = 0; k < params.layers[l].weight.data.size(); ++k) {
            probe(params.layers[l].weight.data[k], g.layers[l].weight.data[k]);
        }
        for (std::size_t k = 0; k < params.layers[l].bias.size(); ++k) probe(params.layers[l].bias[k], g.layers[l].bias[k]);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("mixMatchBatch to backward is bitwise reproducible") {
    const auto params = smallNet(81, {5});
    const auto lb = labeledBatch(4, 82);
    const auto ub = randomImages(4, 83);
    MixMatchConfig cfg;
    auto chain = [&](std::uint64_t seed) {
        Rng rng(seed);
        const auto mixed = mixMatchBatch(lb, ub, params, cfg, rng);
        const auto w = pbcWeights(countLabels(lb.labels, 2), countArgmax(mixed.guessed));
        return compoundLossGradient(params, mixed, cfg, 777, w);
    };
    const auto a = chain(5), b = chain(5);
    CHECK(a.loss.loss == b.loss.loss);
    for (std::size_t l = 0; l < a.grads.layers.size(); ++l) CHECK(a.grads.layers[l] == b.grads.layers[l]);
    CHECK(chain(6).loss.loss != a.loss.loss);
}

TEST_CASE("config validation") {
    MixMatchConfig c;
    CHECK_NOTHROW(c.validate());
    c.K = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.forcedLambda = 0.3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.gamma = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
