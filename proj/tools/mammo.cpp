// Command-line front end. Every subcommand accepts --seed; where a config file
// also carries a seed, the flag wins.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mammo/dedims.hpp"
#include "mammo/errors.hpp"
#include "mammo/experiment.hpp"
#include "mammo/imageio.hpp"
#include "mammo/manifest.hpp"
#include "mammo/preprocess.hpp"
#include "mammo/report.hpp"
#include "mammo/split.hpp"
#include "mammo/stats.hpp"
#include "mammo/synth.hpp"

using namespace mammo;
namespace fs = std::filesystem;

namespace {

void printSummary(const RunResult& r) {
    std::printf("%s  source=%s  n_labels=%zu  subsets=%zu\n", std::string(toString(r.config.configuration)).c_str(),
                r.sourceName.c_str(), r.config.nLabeled, r.perSubsetReports.size());
    for (const auto& s : aggregate(r.perSubsetReports)) {
        std::printf("  %-18s %.4f +- %.4f\n", s.metric.c_str(), s.mean, s.std);
    }
}

ExperimentConfig configFrom(const std::string& path, std::optional<std::uint64_t> seed) {
    ExperimentConfig c = loadExperimentConfig(path);
    if (seed) c.seed = *seed;
    c.validate();
    return c;
}

Configuration configurationArg(const std::string& text) { return parseConfiguration(text); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mammogram classification experiments with MixMatch-style semi-supervised training"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Master seed; overrides any seed in a config file")->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic mammogram-like corpus and its manifest");
    SyntheticSpec spec;
    std::string synthOut, format = "pgm";
    synth->add_option("--out", synthOut, "Output directory")->required();
    synth->add_option("--patients", spec.nPatients);
    synth->add_option("--images-per-patient", spec.imagesPerPatient);
    synth->add_option("--positive-rate", spec.positiveRate);
    synth->add_option("--shift", spec.domainShift, "Domain shift in [0, 1]");
    synth->add_option("--size", spec.size, "Image side in pixels");
    synth->add_flag("--tags", spec.tagArtifacts, "Add bright corner tags");
    synth->add_option("--prefix", spec.idPrefix, "Patient id prefix");
    synth->add_option("--format", format, "pgm (16-bit) or png (8-bit)")->check(CLI::IsMember({"pgm", "png"}));

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "Background removal and resizing; writes a new manifest");
    std::string prepManifest, prepOut;
    int radius = 5, side = 0;
    bool removeBg = true;
    prep->add_option("--manifest", prepManifest)->required();
    prep->add_option("--out", prepOut, "Output directory")->required();
    prep->add_option("--radius", radius, "Rolling-ball radius");
    prep->add_option("--size", side, "Resize to size x size (0 keeps the input size)");
    prep->add_flag("!--keep-background", removeBg, "Skip background removal");

    // split
    auto* split = app.add_subcommand("split", "Patient-disjoint train/test split as JSON");
    std::string splitManifest, splitOut;
    double trainFraction = 0.7;
    split->add_option("--manifest", splitManifest)->required();
    split->add_option("--train-fraction", trainFraction);
    split->add_option("--out", splitOut, "JSON file (stdout when omitted)");

    // train
    auto* train = app.add_subcommand("train", "Run one configuration over all subsets");
    std::string trainConfig, trainOut;
    train->add_option("--config", trainConfig)->required();
    train->add_option("--out", trainOut, "RunResult JSON");

    // eval
    auto* eval = app.add_subcommand("eval", "Summarise a RunResult JSON");
    std::vector<std::string> evalRuns;
    eval->add_option("runs", evalRuns)->required();

    // dedims
    auto* ded = app.add_subcommand("dedims", "Dataset dissimilarity between two manifests");
    std::string dedA, dedB, dedParams;
    std::size_t batches = 10, batchSize = 40;
    int width = 256, dedSide = 0;
    bool rawOrder = false;
    ded->add_option("--a", dedA, "Manifest A")->required();
    ded->add_option("--b", dedB, "Manifest B")->required();
    ded->add_option("--params", dedParams, "Feature extractor parameters; random tanh layer when omitted");
    ded->add_option("--width", width, "Units of the random extractor");
    ded->add_option("--size", dedSide, "Resize both datasets to size x size");
    ded->add_option("--batches", batches);
    ded->add_option("--batch-size", batchSize);
    ded->add_flag("--raw-order", rawOrder, "Compare feature columns without sorting");

    // compare
    auto* cmp = app.add_subcommand("compare", "Paired Wilcoxon test between two RunResults");
    std::string cmpA, cmpB, cmpMetric = metric::kGMean, cmpAlt = "two-sided";
    cmp->add_option("a", cmpA)->required();
    cmp->add_option("b", cmpB)->required();
    cmp->add_option("--metric", cmpMetric);
    cmp->add_option("--alternative", cmpAlt, "two-sided, greater or less");

    // report
    auto* rep = app.add_subcommand("report", "CSV and JSON tables from RunResults");
    std::vector<std::string> repRuns;
    std::string repOut, repA = "SSDL+FT", repB = "S+FT", repAlt = "two-sided";
    double alpha = 0.1;
    rep->add_option("runs", repRuns)->required();
    rep->add_option("--out", repOut, "Output prefix")->required();
    rep->add_option("--compare-a", repA);
    rep->add_option("--compare-b", repB);
    rep->add_option("--alternative", repAlt);
    rep->add_option("--significance", alpha);

    // suite
    auto* suite = app.add_subcommand("suite", "Every configuration at every label budget, then a report");
    std::string suiteConfig, suiteOut, suiteAlt = "two-sided";
    std::vector<std::size_t> labels{20, 40, 60};
    suite->add_option("--config", suiteConfig)->required();
    suite->add_option("--out", suiteOut, "Output prefix")->required();
    suite->add_option("--labels", labels, "Label budgets")->delimiter(',');
    suite->add_option("--alternative", suiteAlt);

    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--seed", seed, "Master seed; overrides any seed in a config file");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            if (seed) spec.seed = *seed;
            const auto corpus = generateSynthetic(spec);
            const auto path = writeSynthetic(corpus, synthOut, format == "png" ? ImageFormat::Png8 : ImageFormat::Pgm16);
            std::printf("%zu images, %zu patients -> %s\n", corpus.images.size(), static_cast<std::size_t>(spec.nPatients),
                        path.string().c_str());
        } else if (*prep) {
            // Preprocessing draws no randomness; --seed is accepted and unused.
            const auto manifest = loadManifest(prepManifest);
            fs::create_directories(prepOut);
            DatasetManifest out;
            BackgroundRemovalOptions opts;
            opts.rollingBallRadius = radius;
            for (std::size_t i = 0; i < manifest.records.size(); ++i) {
                auto rec = manifest.records[i];
                GrayImage img = readImage(manifest.root / rec.imagePath);
                if (removeBg) img = removeBackground(img, opts).image;
                if (side > 0) img = resizeBilinear(img, side, side);
                rec.imagePath = "img_" + std::to_string(i) + ".pgm";
                writePgm16(img, fs::path(prepOut) / rec.imagePath);
                out.records.push_back(rec);
            }
            writeManifest(out, fs::path(prepOut) / "manifest.csv");
            std::printf("%zu images -> %s\n", out.records.size(), (fs::path(prepOut) / "manifest.csv").string().c_str());
        } else if (*split) {
            const auto manifest = loadManifest(splitManifest);
            const auto s = patientDisjointSplit(manifest, trainFraction, seed.value_or(0));
            const nlohmann::json j = {{"seed", seed.value_or(0)}, {"train", s.trainImageIds}, {"test", s.testImageIds}};
            if (splitOut.empty()) {
                std::cout << j.dump(2) << '\n';
            } else {
                std::ofstream(splitOut) << j.dump(2) << '\n';
            }
        } else if (*train) {
            const auto config = configFrom(trainConfig, seed);
            const auto result = runConfiguration(config);
            if (!trainOut.empty()) saveRunResult(result, trainOut);
            printSummary(result);
        } else if (*eval) {
            for (const auto& path : evalRuns) printSummary(loadRunResult(path));
        } else if (*ded) {
            auto load = [&](const std::string& path) {
                auto ds = loadDataset(loadManifest(path), dedSide > 0 ? std::optional(std::pair{dedSide, dedSide}) : std::nullopt);
                return std::move(ds.images);
            };
            const auto a = load(dedA);
            const auto b = load(dedB);
            if (a.empty()) throw DataError("manifest A is empty");
            ModelParams params;
            if (!dedParams.empty()) {
                params = loadParams(dedParams);
            } else {
                ClassifierConfig c;
                c.inputHeight = a.front().height;
                c.inputWidth = a.front().width;
                c.hiddenSizes = {width};
                c.seed = seed.value_or(0);
                params = initModel(c);
            }
            Rng rng(seed.value_or(0));
            const auto r = dedims(FeatureSource::penultimate(params), a, b, rng, batches, batchSize,
                                  DissimilarityOptions{rawOrder});
            std::printf("dedims mean %.6f std %.6f over %zu batches of %zu\n", r.mean, r.std, r.batches, r.batchSize);
        } else if (*cmp) {
            // Wilcoxon is exact and draws nothing; --seed is accepted and unused.
            const auto a = loadRunResult(cmpA);
            const auto b = loadRunResult(cmpB);
            if (a.perSubsetReports.size() != b.perSubsetReports.size()) throw DataError("runs have different subset counts");
            PairedSample s;
            for (std::size_t i = 0; i < a.perSubsetReports.size(); ++i) {
                s.a.push_back(a.perSubsetReports[i].get(cmpMetric));
                s.b.push_back(b.perSubsetReports[i].get(cmpMetric));
            }
            const auto w = wilcoxonSignedRank(s, parseAlternative(cmpAlt));
            std::printf("%s: W=%.1f n=%zu p=%.6f (%s, %s)\n", cmpMetric.c_str(), w.wStatistic, w.nEffective, w.pValue,
                        toString(w.alternative), toString(w.method));
        } else if (*rep) {
            std::vector<RunResult> runs;
            for (const auto& p : repRuns) runs.push_back(loadRunResult(p));
            const auto comparisons =
                compareRuns(runs, configurationArg(repA), configurationArg(repB), metricNames(), parseAlternative(repAlt));
            ReportOptions opts;
            opts.significanceLevel = alpha;
            emitReport(runs, comparisons, repOut, opts);
            std::printf("wrote %s.csv and %s.json\n", repOut.c_str(), repOut.c_str());
        } else if (*suite) {
            SuiteSpec s;
            s.base = configFrom(suiteConfig, seed);
            s.nLabeled = labels;
            s.alternative = parseAlternative(suiteAlt);
            const auto result = runSuite(s, loadExperimentData(s.base));
            emitReport(result.runs, result.comparisons, suiteOut);
            for (const auto& r : result.runs) printSummary(r);
            std::printf("wrote %s.csv and %s.json\n", suiteOut.c_str(), suiteOut.c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
