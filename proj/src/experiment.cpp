#include "mammo/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mammo/errors.hpp"
#include "mammo/inference.hpp"
#include "mammo/split.hpp"
#include "mammo/train.hpp"

namespace mammo {

namespace {

constexpr std::pair<Configuration, std::string_view> kConfigNames[] = {
    {Configuration::SupervisedNoFineTune, "S+No-FT"},
    {Configuration::SupervisedFineTune, "S+FT"},
    {Configuration::SSDL, "SSDL"},
    {Configuration::SSDLFineTune, "SSDL+FT"},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmtDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double toDouble(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
}

std::uint64_t toU64(const std::string& v) {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    std::size_t used = 0;
    const auto u = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
}

int toInt(const std::string& v) {
    std::size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
}

bool toBool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument(v);
}

std::string fmtBool(bool b) { return b ? "true" : "false"; }

std::vector<int> toIntList(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(toInt(trim(item)));
    if (out.empty()) throw std::invalid_argument(v);
    return out;
}

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Field>& fields() {
    using C = ExperimentConfig;
    static const std::vector<Field> table = {
        {"configuration", [](C& c, const std::string& v) { c.configuration = parseConfiguration(v); },
         [](const C& c) { return std::string(toString(c.configuration)); }},
        {"source_manifest", [](C& c, const std::string& v) { c.sourceManifest = v.empty() ? std::nullopt : std::optional(v); },
         [](const C& c) { return c.sourceManifest.value_or(""); }},
        {"target_manifest", [](C& c, const std::string& v) { c.targetManifest = v; },
         [](const C& c) { return c.targetManifest; }},
        {"n_labeled", [](C& c, const std::string& v) { c.nLabeled = toU64(v); },
         [](const C& c) { return std::to_string(c.nLabeled); }},
        {"negative_fraction", [](C& c, const std::string& v) { c.negativeFraction = toDouble(v); },
         [](const C& c) { return fmtDouble(c.negativeFraction); }},
        {"seed", [](C& c, const std::string& v) { c.seed = toU64(v); }, [](const C& c) { return std::to_string(c.seed); }},
        {"epochs", [](C& c, const std::string& v) { c.epochs = toInt(v); }, [](const C& c) { return std::to_string(c.epochs); }},
        {"subsets", [](C& c, const std::string& v) { c.subsets = toInt(v); },
         [](const C& c) { return std::to_string(c.subsets); }},
        {"batch_size", [](C& c, const std::string& v) { c.batchSize = toU64(v); },
         [](const C& c) { return std::to_string(c.batchSize); }},
        {"train_fraction", [](C& c, const std::string& v) { c.trainFraction = toDouble(v); },
         [](const C& c) { return fmtDouble(c.trainFraction); }},
        {"validation_fraction", [](C& c, const std::string& v) { c.validationFraction = toDouble(v); },
         [](const C& c) { return fmtDouble(c.validationFraction); }},
        {"epoch_span", [](C& c, const std::string& v) { c.epochSpan = parseEpochSpan(v); },
         [](const C& c) { return std::string(toString(c.epochSpan)); }},
        {"select_on_test", [](C& c, const std::string& v) { c.selectOnTest = toBool(v); },
         [](const C& c) { return fmtBool(c.selectOnTest); }},
        {"model.input_height", [](C& c, const std::string& v) { c.model.inputHeight = toInt(v); },
         [](const C& c) { return std::to_string(c.model.inputHeight); }},
        {"model.input_width", [](C& c, const std::string& v) { c.model.inputWidth = toInt(v); },
         [](const C& c) { return std::to_string(c.model.inputWidth); }},
        {"model.hidden_sizes", [](C& c, const std::string& v) { c.model.hiddenSizes = toIntList(v); },
         [](const C& c) {
             std::string s;
             for (std::size_t i = 0; i < c.model.hiddenSizes.size(); ++i) {
                 s += (i ? "," : "") + std::to_string(c.model.hiddenSizes[i]);
             }
             return s;
         }},
        {"model.num_classes", [](C& c, const std::string& v) { c.model.numClasses = toInt(v); },
         [](const C& c) { return std::to_string(c.model.numClasses); }},
        {"model.init_scale", [](C& c, const std::string& v) { c.model.initScale = toDouble(v); },
         [](const C& c) { return fmtDouble(c.model.initScale); }},
        {"optim.learning_rate", [](C& c, const std::string& v) { c.optim.learningRate = toDouble(v); },
         [](const C& c) { return fmtDouble(c.optim.learningRate); }},
        {"optim.weight_decay", [](C& c, const std::string& v) { c.optim.weightDecay = toDouble(v); },
         [](const C& c) { return fmtDouble(c.optim.weightDecay); }},
        {"mixmatch.k", [](C& c, const std::string& v) { c.mixmatch.K = toInt(v); },
         [](const C& c) { return std::to_string(c.mixmatch.K); }},
        {"mixmatch.temperature", [](C& c, const std::string& v) { c.mixmatch.T = toDouble(v); },
         [](const C& c) { return fmtDouble(c.mixmatch.T); }},
        {"mixmatch.alpha", [](C& c, const std::string& v) { c.mixmatch.alpha = toDouble(v); },
         [](const C& c) { return fmtDouble(c.mixmatch.alpha); }},
        {"mixmatch.gamma", [](C& c, const std::string& v) { c.mixmatch.gamma = toDouble(v); },
         [](const C& c) { return fmtDouble(c.mixmatch.gamma); }},
        {"mixmatch.rampup_denominator", [](C& c, const std::string& v) { c.mixmatch.rampupDenominator = toDouble(v); },
         [](const C& c) { return fmtDouble(c.mixmatch.rampupDenominator); }},
        {"mixmatch.pbc", [](C& c, const std::string& v) { c.mixmatch.pbcEnabled = toBool(v); },
         [](const C& c) { return fmtBool(c.mixmatch.pbcEnabled); }},
        {"mixmatch.forced_lambda",
         [](C& c, const std::string& v) { c.mixmatch.forcedLambda = v == "none" ? std::nullopt : std::optional(toDouble(v)); },
         [](const C& c) { return c.mixmatch.forcedLambda ? fmtDouble(*c.mixmatch.forcedLambda) : std::string("none"); }},
        {"augment.flip_probability",
         [](C& c, const std::string& v) { c.augment.flipProbability = c.mixmatch.augment.flipProbability = toDouble(v); },
         [](const C& c) { return fmtDouble(c.augment.flipProbability); }},
        {"augment.max_rotation_deg",
         [](C& c, const std::string& v) { c.augment.maxRotationDeg = c.mixmatch.augment.maxRotationDeg = toDouble(v); },
         [](const C& c) { return fmtDouble(c.augment.maxRotationDeg); }},
        {"preprocess.source_background_removal", [](C& c, const std::string& v) { c.sourceBackgroundRemoval = toBool(v); },
         [](const C& c) { return fmtBool(c.sourceBackgroundRemoval); }},
        {"preprocess.target_background_removal", [](C& c, const std::string& v) { c.targetBackgroundRemoval = toBool(v); },
         [](const C& c) { return fmtBool(c.targetBackgroundRemoval); }},
        {"preprocess.rolling_ball_radius", [](C& c, const std::string& v) { c.rollingBallRadius = toInt(v); },
         [](const C& c) { return std::to_string(c.rollingBallRadius); }},
    };
    return table;
}

const Field* findField(const std::string& key) {
    for (const auto& f : fields()) {
        if (key == f.key) return &f;
    }
    return nullptr;
}

Dataset prepareDataset(const std::filesystem::path& manifestPath, bool removeBg, const ExperimentConfig& config) {
    const DatasetManifest manifest = loadManifest(manifestPath);
    Dataset d = loadDataset(manifest);
    for (auto& img : d.images) {
        if (removeBg) img = removeBackground(img, {config.rollingBallRadius, 1}).image;
        if (img.width != config.model.inputWidth || img.height != config.model.inputHeight) {
            img = resizeBilinear(img, config.model.inputWidth, config.model.inputHeight);
        }
    }
    return d;
}

LabeledBatch toLabeled(const Dataset& d) {
    LabeledBatch b;
    b.images = d.images;
    for (const auto& s : d.samples) b.labels.push_back(s.label);
    return b;
}

// Substream tags under a subset seed.
enum SubsetStream : std::uint64_t {
    kInit = 11, kPretrainHoldout = 12, kPretrainTrain = 13, kSplit = 14, kHoldout = 15, kBudget = 16, kTargetTrain = 17
};

std::string pretrainKey(const ExperimentConfig& c, std::uint64_t seed, const std::string& sourceName) {
    return sourceName + '|' + std::to_string(seed) + '|' + c.model.architectureTag() + '|' + fmtDouble(c.model.initScale) +
           '|' + fmtDouble(c.optim.learningRate) + '|' + fmtDouble(c.optim.weightDecay) + '|' + std::to_string(c.epochs) +
           '|' + std::to_string(c.batchSize) + '|' + fmtDouble(c.validationFraction) + '|' +
           fmtDouble(c.augment.flipProbability) + '|' + fmtDouble(c.augment.maxRotationDeg);
}

nlohmann::json reportToJson(const MetricReport& r) {
    nlohmann::json j;
    for (const auto& name : metricNames()) j[name] = r.get(name);
    j["degenerate"] = std::vector<std::string>(r.degenerateFlags.begin(), r.degenerateFlags.end());
    return j;
}

MetricReport reportFromJson(const nlohmann::json& j) {
    MetricReport r;
    r.accuracy = j.at(metric::kAccuracy).get<double>();
    r.recall = j.at(metric::kRecall).get<double>();
    r.specificity = j.at(metric::kSpecificity).get<double>();
    r.precision = j.at(metric::kPrecision).get<double>();
    r.f2 = j.at(metric::kF2).get<double>();
    r.gMean = j.at(metric::kGMean).get<double>();
    r.balancedAccuracy = j.at(metric::kBalancedAccuracy).get<double>();
    for (const auto& f : j.at("degenerate")) r.degenerateFlags.insert(f.get<std::string>());
    return r;
}

}  // namespace

std::string_view toString(Configuration c) {
    for (const auto& [k, name] : kConfigNames) {
        if (k == c) return name;
    }
    return "?";
}

Configuration parseConfiguration(std::string_view text) {
    for (const auto& [k, name] : kConfigNames) {
        if (name == text) return k;
    }
    throw ConfigError("unknown configuration '" + std::string(text) + "' (expected S+No-FT, S+FT, SSDL or SSDL+FT)");
}

bool needsSource(Configuration c) { return c != Configuration::SSDL; }
bool usesSSDL(Configuration c) { return c == Configuration::SSDL || c == Configuration::SSDLFineTune; }

void ExperimentConfig::validate() const {
    if (needsSource(configuration) && !sourceManifest) {
        throw ConfigError(std::string(toString(configuration)) + " needs source_manifest");
    }
    if (targetManifest.empty()) throw ConfigError("target_manifest is required");
    if (nLabeled < 2) throw ConfigError("n_labeled must be >= 2");
    if (!(negativeFraction >= 0.0 && negativeFraction < 1.0)) throw ConfigError("negative_fraction must lie in [0, 1)");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (subsets < 1) throw ConfigError("subsets must be >= 1");
    if (batchSize < 1) throw ConfigError("batch_size must be >= 1");
    if (!(trainFraction > 0.0 && trainFraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    if (!(validationFraction >= 0.0 && validationFraction < 1.0)) throw ConfigError("validation_fraction must lie in [0, 1)");
    if (!selectOnTest && validationFraction == 0.0) throw ConfigError("validation_fraction must be > 0 unless select_on_test");
    if (rollingBallRadius < 1) throw ConfigError("preprocess.rolling_ball_radius must be >= 1");
    model.validate();
    try {
        optim.validate();
        if (usesSSDL(configuration)) mixmatch.validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parseExperimentConfig(std::string_view text, const std::string& sourceName) {
    ExperimentConfig c;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineNo = 0;
    while (std::getline(in, raw)) {
        ++lineNo;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = sourceName + ":" + std::to_string(lineNo);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const Field* f = findField(key);
        if (!f) throw ConfigError(where + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
        try {
            f->set(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        } catch (const std::exception&) {
            throw ConfigError(where + ": invalid value '" + value + "' for " + key);
        }
    }
    return c;
}

ExperimentConfig loadExperimentConfig(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = parseExperimentConfig(ss.str(), path.string());
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (path.parent_path() / p).lexically_normal().string();
    };
    resolve(c.targetManifest);
    if (c.sourceManifest) resolve(*c.sourceManifest);
    return c;
}

std::string formatExperimentConfig(const ExperimentConfig& config) {
    std::string out;
    for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + '\n';
    return out;
}

ExperimentData loadExperimentData(const ExperimentConfig& config) {
    config.validate();
    ExperimentData data;
    data.target = prepareDataset(config.targetManifest, config.targetBackgroundRemoval, config);
    data.targetName = std::filesystem::path(config.targetManifest).parent_path().filename().string();
    if (config.sourceManifest && needsSource(config.configuration)) {
        data.source = prepareDataset(*config.sourceManifest, config.sourceBackgroundRemoval, config);
        data.sourceName = std::filesystem::path(*config.sourceManifest).parent_path().filename().string();
    }
    return data;
}

std::uint64_t subsetSeed(std::uint64_t masterSeed, int index) {
    return deriveSeed(masterSeed, {0x5B5E7ULL, static_cast<std::uint64_t>(index)});
}

RunResult runConfiguration(const ExperimentConfig& config, const ExperimentData& data, PretrainCache* cache) {
    config.validate();
    if (needsSource(config.configuration) && !data.source) {
        throw ConfigError(std::string(toString(config.configuration)) + " needs a source dataset");
    }
    for (const Dataset* d : {&data.target, data.source ? &*data.source : nullptr}) {
        if (!d) continue;
        for (const auto& img : d->images) {
            if (img.width != config.model.inputWidth || img.height != config.model.inputHeight) {
                throw ConfigError("dataset image size does not match the model input size");
            }
        }
    }

    RunResult result;
    result.config = config;
    result.sourceName = needsSource(config.configuration) ? (data.sourceName.empty() ? "source" : data.sourceName) : "-";

    TrainOptions base;
    base.epochs = config.epochs;
    base.epochSpan = config.epochSpan;
    base.batchSize = config.batchSize;
    base.augment = config.augment;

    for (int i = 0; i < config.subsets; ++i) {
        const std::uint64_t seed = subsetSeed(config.seed, i);
        ClassifierConfig modelCfg = config.model;
        modelCfg.seed = deriveSeed(seed, {kInit});
        const ModelParams fresh = initModel(modelCfg);

        ModelParams start = fresh;
        int pretrainEpoch = 0;
        if (needsSource(config.configuration)) {
            const std::string key = pretrainKey(config, seed, result.sourceName);
            const std::pair<ModelParams, int>* cached = nullptr;
            if (cache) {
                const auto it = cache->entries.find(key);
                if (it != cache->entries.end()) cached = &it->second;
            }
            if (cached) {
                start = cached->first;
                pretrainEpoch = cached->second;
            } else {
                const Dataset& src = *data.source;
                const auto [kept, held] = stratifiedHoldout(src.samples, config.validationFraction > 0 ? config.validationFraction : 0.15,
                                                            deriveSeed(seed, {kPretrainHoldout}));
                TrainOptions opts = base;
                opts.seed = deriveSeed(seed, {kPretrainTrain});
                const TrainResult pre =
                    trainSupervised(toLabeled(src.subset(kept)), fresh, config.optim, opts, toLabeled(src.subset(held)));
                start = pre.params;
                pretrainEpoch = pre.bestEpoch;
                if (cache) cache->entries.emplace(key, std::make_pair(start, pretrainEpoch));
            }
        }

        const SplitSpec split = patientDisjointSplit(data.target.samples, config.trainFraction, deriveSeed(seed, {kSplit}));
        const Dataset test = data.target.subset(split.testIndices);

        ModelParams finalParams = start;
        int bestEpoch = pretrainEpoch;
        if (config.configuration != Configuration::SupervisedNoFineTune) {
            const Dataset train = data.target.subset(split.trainIndices);
            Dataset pool = train;
            Dataset val = test;
            if (!config.selectOnTest) {
                const auto [kept, held] = stratifiedHoldout(train.samples, config.validationFraction, deriveSeed(seed, {kHoldout}));
                pool = train.subset(kept);
                val = train.subset(held);
            }
            const LabelBudget budget =
                sampleLabelBudget(pool.samples, config.nLabeled, config.negativeFraction, deriveSeed(seed, {kBudget}));
            const LabeledBatch labeled = toLabeled(pool.subset(budget.labeled));
            TrainOptions opts = base;
            opts.seed = deriveSeed(seed, {kTargetTrain});
            TrainResult tr;
            if (usesSSDL(config.configuration)) {
                const Dataset unlabeled = pool.subset(budget.unlabeled);
                if (unlabeled.images.empty()) throw DataError("label budget leaves no unlabeled images");
                tr = trainSSDL(labeled, unlabeled.images, start, config.optim, config.mixmatch, opts, toLabeled(val));
            } else {
                tr = trainSupervised(labeled, start, config.optim, opts, toLabeled(val));
            }
            finalParams = tr.params;
            bestEpoch = tr.bestEpoch;
        }

        std::vector<int> actual;
        for (const auto& s : test.samples) actual.push_back(s.label);
        const ConfusionMatrix cm = confusionFromPredictions(predictLabels(finalParams, test.images), actual);
        result.perSubsetConfusion.push_back(cm);
        result.perSubsetReports.push_back(evaluateMetrics(cm));
        result.bestEpochPerSubset.push_back(bestEpoch);
    }
    return result;
}

RunResult runConfiguration(const ExperimentConfig& config) {
    const ExperimentData data = loadExperimentData(config);
    return runConfiguration(config, data);
}

std::string runResultToJson(const RunResult& result) {
    nlohmann::json j;
    j["format"] = "mammo-run";
    j["version"] = 1;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& f : fields()) cfg[f.key] = f.get(result.config);
    j["config"] = cfg;
    j["source"] = result.sourceName;
    j["best_epoch_per_subset"] = result.bestEpochPerSubset;
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : result.perSubsetReports) reports.push_back(reportToJson(r));
    j["per_subset_reports"] = reports;
    nlohmann::json cms = nlohmann::json::array();
    for (const auto& cm : result.perSubsetConfusion) cms.push_back({{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}});
    j["per_subset_confusion"] = cms;
    return j.dump(2) + '\n';
}

RunResult runResultFromJson(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "mammo-run") throw DataError("not a run result document");
        RunResult r;
        for (const auto& [key, value] : j.at("config").items()) {
            const Field* f = findField(key);
            if (!f) throw DataError("run result has unknown config key '" + key + "'");
            f->set(r.config, value.get<std::string>());
        }
        r.sourceName = j.at("source").get<std::string>();
        r.bestEpochPerSubset = j.at("best_epoch_per_subset").get<std::vector<int>>();
        for (const auto& rep : j.at("per_subset_reports")) r.perSubsetReports.push_back(reportFromJson(rep));
        for (const auto& cm : j.at("per_subset_confusion")) {
            r.perSubsetConfusion.push_back({cm.at("tp").get<std::uint64_t>(), cm.at("tn").get<std::uint64_t>(),
                                            cm.at("fp").get<std::uint64_t>(), cm.at("fn").get<std::uint64_t>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed run result: ") + e.what());
    }
}

void saveRunResult(const RunResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << runResultToJson(result);
    if (!out) throw IoError("failed writing " + path.string());
}

RunResult loadRunResult(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open run result " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return runResultFromJson(ss.str());
}

}  // namespace mammo
