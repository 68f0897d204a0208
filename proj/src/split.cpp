#include "mammo/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "mammo/errors.hpp"
#include "mammo/rng.hpp"

namespace mammo {

namespace {

struct PatientGroup {
    std::vector<std::size_t> images;
    std::array<std::size_t, 2> classCount{0, 0};
};

constexpr int kSplitAttempts = 200;

}  // namespace

SplitSpec patientDisjointSplit(std::span<const Sample> samples, double trainFraction, std::uint64_t seed) {
    if (!(trainFraction > 0.0 && trainFraction < 1.0)) throw ContractError("trainFraction must lie in (0, 1)");
    std::vector<PatientGroup> patients;
    std::map<std::string, std::size_t> byId;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.label != 0 && s.label != 1) throw ContractError("split expects binary labels");
        auto [it, fresh] = byId.emplace(s.patientId, patients.size());
        if (fresh) patients.emplace_back();
        patients[it->second].images.push_back(i);
        ++patients[it->second].classCount[static_cast<std::size_t>(s.label)];
    }
    if (patients.size() < 2) throw ContractError("patient-disjoint split needs at least two patients");

    std::array<std::size_t, 2> patientsWithClass{0, 0};
    for (const auto& p : patients) {
        for (std::size_t c = 0; c < 2; ++c) patientsWithClass[c] += p.classCount[c] > 0 ? 1 : 0;
    }
    const double total = static_cast<double>(samples.size());

    std::vector<std::size_t> order(patients.size());
    for (int attempt = 0; attempt < kSplitAttempts; ++attempt) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(deriveSeed(seed, {0x5911ULL, static_cast<std::uint64_t>(attempt)}));
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<bool> inTrain(patients.size(), false);
        std::size_t trainImages = 0;
        std::size_t k = 0;
        while (k < order.size() && static_cast<double>(trainImages) / total < trainFraction) {
            inTrain[order[k]] = true;
            trainImages += patients[order[k]].images.size();
            ++k;
        }
        if (k == order.size()) continue;  // test side would be empty

        bool ok = true;
        for (std::size_t c = 0; c < 2 && ok; ++c) {
            if (patientsWithClass[c] < 2) continue;
            bool train = false, test = false;
            for (std::size_t p = 0; p < patients.size(); ++p) {
                if (patients[p].classCount[c] == 0) continue;
                (inTrain[p] ? train : test) = true;
            }
            ok = train && test;
        }
        if (!ok) continue;

        SplitSpec spec;
        spec.seed = seed;
        for (std::size_t p = 0; p < patients.size(); ++p) {
            auto& dst = inTrain[p] ? spec.trainIndices : spec.testIndices;
            dst.insert(dst.end(), patients[p].images.begin(), patients[p].images.end());
        }
        std::sort(spec.trainIndices.begin(), spec.trainIndices.end());
        std::sort(spec.testIndices.begin(), spec.testIndices.end());
        for (auto i : spec.trainIndices) spec.trainImageIds.push_back(samples[i].imageId);
        for (auto i : spec.testIndices) spec.testImageIds.push_back(samples[i].imageId);
        return spec;
    }
    throw DataError("no patient-disjoint split places every shared class on both sides (after " +
                    std::to_string(kSplitAttempts) + " shuffles)");
}

SplitSpec patientDisjointSplit(const DatasetManifest& manifest, double trainFraction, std::uint64_t seed) {
    std::vector<Sample> samples;
    for (const auto& r : manifest.records) {
        const BinaryLabel label = binarizeBirads(r.birads, r.imagePath);
        if (label == BinaryLabel::Excluded) continue;
        samples.push_back({r.imagePath, r.patientId, label == BinaryLabel::Positive ? 1 : 0});
    }
    return patientDisjointSplit(samples, trainFraction, seed);
}

std::size_t budgetPositives(std::size_t nLabeled, double negativeFraction) {
    if (!(negativeFraction >= 0.0 && negativeFraction < 1.0)) throw ContractError("negativeFraction must lie in [0, 1)");
    const auto rounded = static_cast<std::size_t>(std::llround(static_cast<double>(nLabeled) * (1.0 - negativeFraction)));
    return std::max<std::size_t>(1, rounded);
}

LabelBudget sampleLabelBudget(std::span<const Sample> trainSet, std::size_t nLabeled, double negativeFraction,
                              std::uint64_t seed) {
    if (nLabeled < 2) throw ContractError("label budget needs at least two labels");
    const std::size_t wantPos = budgetPositives(nLabeled, negativeFraction);
    if (wantPos >= nLabeled) throw ContractError("label budget leaves no negatives");
    const std::size_t wantNeg = nLabeled - wantPos;

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < trainSet.size(); ++i) (trainSet[i].label == 1 ? pos : neg).push_back(i);
    if (pos.size() < wantPos || neg.size() < wantNeg) {
        throw DataError("label budget of " + std::to_string(nLabeled) + " needs " + std::to_string(wantPos) +
                        " positives and " + std::to_string(wantNeg) + " negatives; train set has " +
                        std::to_string(pos.size()) + " and " + std::to_string(neg.size()));
    }
    Rng rng(deriveSeed(seed, {0xB0D6ULL}));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    LabelBudget b;
    std::vector<bool> chosen(trainSet.size(), false);
    for (std::size_t k = 0; k < wantPos; ++k) chosen[pos[k]] = true;
    for (std::size_t k = 0; k < wantNeg; ++k) chosen[neg[k]] = true;
    for (std::size_t i = 0; i < trainSet.size(); ++i) (chosen[i] ? b.labeled : b.unlabeled).push_back(i);
    return b;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratifiedHoldout(std::span<const Sample> samples,
                                                                                double fraction,
                                                                                std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ContractError("holdout fraction must lie in [0, 1)");
    Rng rng(deriveSeed(seed, {0x4A1DULL}));
    std::vector<bool> held(samples.size(), false);
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].label == c) idx.push_back(i);
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        if (fraction > 0.0 && idx.size() >= 2) take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
        for (std::size_t k = 0; k < take; ++k) held[idx[k]] = true;
    }
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < samples.size(); ++i) (held[i] ? out.second : out.first).push_back(i);
    return out;
}

}  // namespace mammo
