#include "mammo/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mammo/errors.hpp"
#include "mammo/imageio.hpp"

namespace mammo {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitCsvLine(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

int parseInt(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": '" + text + "' is not an integer");
    }
}

}  // namespace

DatasetManifest parseManifest(std::string_view text, const std::string& sourceName) {
    DatasetManifest m;
    std::set<std::string> seen;
    std::size_t lineNo = 0;
    bool headerSeen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineNo;
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::string where = sourceName + ":" + std::to_string(lineNo);
        if (!headerSeen) {
            if (line != kManifestHeader) {
                throw DataError(where + ": expected header '" + std::string(kManifestHeader) + "'");
            }
            headerSeen = true;
            continue;
        }
        const auto f = splitCsvLine(line);
        if (f.size() != 6) throw DataError(where + ": expected 6 fields, found " + std::to_string(f.size()));
        ManifestRecord r;
        r.imagePath = f[0];
        if (r.imagePath.empty()) throw DataError(where + ": field image_path is empty");
        r.patientId = f[1];
        if (r.patientId.empty()) throw DataError(where + ": field patient_id is empty");
        r.birads = parseInt(f[2], where + " field birads");
        if (r.birads < 0 || r.birads > 6) {
            throw DataError(where + ": field birads has invalid category " + f[2] + " (expected 0-6)");
        }
        const std::string view = upper(f[3]);
        if (view == "CC") r.view = View::CC;
        else if (view == "MLO") r.view = View::MLO;
        else throw DataError(where + ": field view must be CC or MLO, got '" + f[3] + "'");
        const std::string side = upper(f[4]);
        if (side == "L" || side == "LEFT") r.side = Side::Left;
        else if (side == "R" || side == "RIGHT") r.side = Side::Right;
        else throw DataError(where + ": field side must be L or R, got '" + f[4] + "'");
        if (!f[5].empty()) r.ageYears = parseInt(f[5], where + " field age");
        if (!seen.insert(r.imagePath).second) {
            throw DataError(where + ": duplicate image_path '" + r.imagePath + "'");
        }
        m.records.push_back(std::move(r));
    }
    if (!headerSeen) throw DataError(sourceName + ": missing header");
    if (m.records.empty()) throw DataError(sourceName + ": manifest has no records");
    return m;
}

DatasetManifest loadManifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    DatasetManifest m = parseManifest(ss.str(), path.string());
    m.root = path.parent_path();
    return m;
}

std::string formatManifest(const DatasetManifest& manifest) {
    std::string out(kManifestHeader);
    out += '\n';
    for (const auto& r : manifest.records) {
        out += r.imagePath + ',' + r.patientId + ',' + std::to_string(r.birads) + ',' +
               (r.view == View::CC ? "CC" : "MLO") + ',' + (r.side == Side::Left ? "L" : "R") + ',' +
               (r.ageYears ? std::to_string(*r.ageYears) : std::string()) + '\n';
    }
    return out;
}

void writeManifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << formatManifest(manifest);
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<BinaryLabel> binarizeManifest(const DatasetManifest& manifest) {
    std::vector<BinaryLabel> out;
    out.reserve(manifest.records.size());
    for (const auto& r : manifest.records) out.push_back(binarizeBirads(r.birads, r.imagePath));
    return out;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.label == 1; }));
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset d;
    d.samples.reserve(indices.size());
    d.images.reserve(indices.size());
    for (auto i : indices) {
        d.samples.push_back(samples.at(i));
        d.images.push_back(images.at(i));
    }
    return d;
}

Dataset datasetFromImages(const DatasetManifest& manifest, std::vector<GrayImage> images,
                          std::optional<std::pair<int, int>> resizeTo) {
    if (images.size() != manifest.records.size()) throw ContractError("image count does not match manifest records");
    Dataset d;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& r = manifest.records[i];
        const BinaryLabel label = binarizeBirads(r.birads, r.imagePath);
        if (label == BinaryLabel::Excluded) continue;
        d.samples.push_back({r.imagePath, r.patientId, label == BinaryLabel::Positive ? 1 : 0});
        GrayImage img = std::move(images[i]);
        if (resizeTo && (img.width != resizeTo->first || img.height != resizeTo->second)) {
            img = resizeBilinear(img, resizeTo->first, resizeTo->second);
        }
        d.images.push_back(std::move(img));
    }
    return d;
}

Dataset loadDataset(const DatasetManifest& manifest, std::optional<std::pair<int, int>> resizeTo) {
    std::vector<GrayImage> images;
    images.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        if (binarizeBirads(r.birads, r.imagePath) == BinaryLabel::Excluded) {
            images.emplace_back();
            continue;
        }
        images.push_back(readImage(manifest.root / r.imagePath));
    }
    return datasetFromImages(manifest, std::move(images), resizeTo);
}

}  // namespace mammo
