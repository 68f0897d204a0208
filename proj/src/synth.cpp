#include "mammo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mammo/errors.hpp"
#include "mammo/imageio.hpp"
#include "mammo/rng.hpp"

namespace mammo {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Blob {
    double u, v, sigma, amplitude;
};

struct PatientAnatomy {
    double cy, rx, ry, base;
};

struct ImageDraw {
    PatientAnatomy anatomy;
    Side side;
    bool positive;
};

// One image; all randomness comes from `rng`, which is private to the image.
void renderImage(const SyntheticSpec& spec, const ImageDraw& d, Rng& rng, GrayImage& img, BinaryMask& lobe,
                 BinaryMask& tag) {
    const int S = spec.size;
    const double shift = spec.domainShift;
    const double scale = 1.0 - 0.2 * shift;
    const double cy = d.anatomy.cy + uniform(rng, -0.03, 0.03);
    const double rx = d.anatomy.rx * scale * uniform(rng, 0.95, 1.05);
    const double ry = d.anatomy.ry * scale * uniform(rng, 0.95, 1.05);
    const double base = d.anatomy.base;

    std::vector<Blob> texture(6);
    for (auto& b : texture) {
        const double ang = uniform(rng, -1.5, 1.5);
        const double rad = uniform(rng, 0.0, 0.8);
        b = {rad * rx * std::cos(ang), cy + rad * ry * std::sin(ang), uniform(rng, 0.05, 0.12), uniform(rng, -0.07, 0.07)};
    }
    Blob mass{0, 0, 1, 0};
    if (d.positive) {
        const double ang = uniform(rng, -1.2, 1.2);
        const double rad = uniform(rng, 0.25, 0.65);
        mass = {rad * rx * std::cos(ang), cy + rad * ry * std::sin(ang), uniform(rng, 0.05, 0.07) * (1.0 + 0.4 * shift),
                0.38 * (1.0 - 0.35 * shift)};
    }

    const double gammaExp = 1.0 + 0.8 * shift;
    const double noiseSigma = 0.01 + 0.03 * shift;
    std::normal_distribution<double> noise(0.0, noiseSigma);
    const double inv = 1.0 / static_cast<double>(S - 1);
    const double edgePx = std::min(rx, ry) * static_cast<double>(S);

    img = GrayImage(S, S);
    lobe = BinaryMask(S, S);
    tag = BinaryMask(S, S);
    for (int y = 0; y < S; ++y) {
        for (int x = 0; x < S; ++x) {
            // Lobe coordinates measured from the attached edge.
            const int xl = d.side == Side::Left ? x : S - 1 - x;
            const double u = xl * inv;
            const double v = y * inv;
            const double du = u / rx, dv = (v - cy) / ry;
            const double rho = std::sqrt(du * du + dv * dv);
            const double m = std::clamp(0.5 + (1.0 - rho) * edgePx, 0.0, 1.0);
            double inside = base * (0.85 + 0.15 * (1.0 - std::min(rho * rho, 1.0)));
            for (const auto& b : texture) {
                const double e2 = ((u - b.u) * (u - b.u) + (v - b.v) * (v - b.v)) / (2.0 * b.sigma * b.sigma);
                inside += b.amplitude * std::exp(-e2);
            }
            if (d.positive) {
                const double e2 = ((u - mass.u) * (u - mass.u) + (v - mass.v) * (v - mass.v)) / (2.0 * mass.sigma * mass.sigma);
                inside += mass.amplitude * std::exp(-e2);
            }
            const double background = 0.03 + uniform(rng, 0.0, 0.02);
            double value = background * (1.0 - m) + m * std::clamp(inside, 0.0, 1.0);
            value = std::clamp(0.1 * shift + (1.0 - 0.2 * shift) * std::pow(value, gammaExp) + noise(rng), 0.0, 1.0);
            img.at(x, y) = value;
            lobe.set(x, y, m >= 0.5);
        }
    }

    if (spec.tagArtifacts) {
        const int tw = static_cast<int>(uniform(rng, 4.0, 8.0));
        const int th = static_cast<int>(uniform(rng, 3.0, 7.0));
        const bool top = uniform01(rng) < 0.5;
        const double level = uniform(rng, 0.9, 1.0);
        const int margin = 2;
        const int x0l = S - margin - tw;  // far from the attached edge
        const int y0 = top ? margin : S - margin - th;
        for (int y = y0; y < y0 + th; ++y) {
            for (int xl = x0l; xl < x0l + tw; ++xl) {
                const int x = d.side == Side::Left ? xl : S - 1 - xl;
                img.at(x, y) = level;
                tag.set(x, y, true);
                lobe.set(x, y, false);
            }
        }
    }
}

}  // namespace

void SyntheticSpec::validate() const {
    if (nPatients < 1) throw ContractError("synthetic corpus needs at least one patient");
    if (!(imagesPerPatient >= 1.0)) throw ContractError("imagesPerPatient must be >= 1");
    if (!(positiveRate > 0.0 && positiveRate < 1.0)) throw ContractError("positiveRate must lie in (0, 1)");
    if (!(domainShift >= 0.0 && domainShift <= 1.0)) throw ContractError("domainShift must lie in [0, 1]");
    if (size < 16) throw ContractError("synthetic image size must be >= 16");
}

SyntheticCorpus generateSynthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng layout(deriveSeed(spec.seed, {0x5E7ULL}));

    const auto total = std::max<std::size_t>(
        static_cast<std::size_t>(spec.nPatients),
        static_cast<std::size_t>(std::llround(static_cast<double>(spec.nPatients) * spec.imagesPerPatient)));
    const auto nP = static_cast<std::size_t>(spec.nPatients);
    std::vector<std::size_t> perPatient(nP, total / nP);
    std::vector<std::size_t> order(nP);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), layout);
    for (std::size_t k = 0; k < total % nP; ++k) ++perPatient[order[k]];

    const auto positives = static_cast<std::size_t>(std::llround(spec.positiveRate * static_cast<double>(total)));
    std::vector<bool> isPositive(total, false);
    std::vector<std::size_t> imageOrder(total);
    std::iota(imageOrder.begin(), imageOrder.end(), std::size_t{0});
    std::shuffle(imageOrder.begin(), imageOrder.end(), layout);
    for (std::size_t k = 0; k < positives; ++k) isPositive[imageOrder[k]] = true;

    SyntheticCorpus corpus;
    std::size_t imageIndex = 0;
    char name[96];
    for (std::size_t p = 0; p < nP; ++p) {
        Rng prng(deriveSeed(spec.seed, {0xA7ULL, p}));
        const PatientAnatomy anatomy{uniform(prng, 0.45, 0.55), uniform(prng, 0.56, 0.68), uniform(prng, 0.37, 0.47),
                                     uniform(prng, 0.5, 0.6)};
        const Side side = uniform01(prng) < 0.5 ? Side::Left : Side::Right;
        const int age = static_cast<int>(uniform(prng, 40.0, 80.0));
        std::snprintf(name, sizeof name, "%s-p%03zu", spec.idPrefix.c_str(), p);
        const std::string patientId = name;
        for (std::size_t k = 0; k < perPatient[p]; ++k, ++imageIndex) {
            const bool positive = isPositive[imageIndex];
            Rng irng(deriveSeed(spec.seed, {0x1AULL, imageIndex}));
            GrayImage img;
            BinaryMask lobe, tag;
            renderImage(spec, {anatomy, side, positive}, irng, img, lobe, tag);

            ManifestRecord r;
            std::snprintf(name, sizeof name, "%s-i%04zu", patientId.c_str(), imageIndex);
            r.imagePath = std::string("images/") + name + ".pgm";
            r.patientId = patientId;
            r.birads = positive ? (uniform01(irng) < 0.5 ? 4 : 5) : (uniform01(irng) < 0.5 ? 1 : 2);
            r.view = k % 2 == 0 ? View::CC : View::MLO;
            r.side = side;
            r.ageYears = age;
            corpus.manifest.records.push_back(std::move(r));
            corpus.images.push_back(std::move(img));
            corpus.lobeMasks.push_back(std::move(lobe));
            corpus.tagMasks.push_back(std::move(tag));
        }
    }
    return corpus;
}

std::filesystem::path writeSynthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir,
                                     ImageFormat format) {
    std::filesystem::create_directories(dir / "images");
    DatasetManifest manifest = corpus.manifest;
    manifest.root = dir;
    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        auto& path = manifest.records[i].imagePath;
        if (format == ImageFormat::Png8) {
            path = std::filesystem::path(path).replace_extension(".png").generic_string();
            writePng8(corpus.images[i], dir / path);
        } else {
            writePgm16(corpus.images[i], dir / path);
        }
    }
    const auto manifestPath = dir / "manifest.csv";
    writeManifest(manifest, manifestPath);
    return manifestPath;
}

}  // namespace mammo
