#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "glyphforge/errors.hpp"
#include "glyphforge/image.hpp"
#include "glyphforge/image_io.hpp"
#include "glyphforge/rng.hpp"

namespace glyphforge {

/// Decoded grayscale sample. path identifies the image itself; source names
/// the original it was derived from (equal to path for originals).
struct LabeledImage {
    Pixels pixels;
    int label = 0;  // 0..25 for a..z
    std::string path;
    std::string source;
    std::string method = "original";
};

enum class Split { train, val, test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

enum class SplitMode { paper_faithful, leakage_safe };

struct ManifestEntry {
    std::string path;
    int label = 0;
    Split split = Split::train;
};

struct SplitManifest {
    SplitMode mode = SplitMode::paper_faithful;
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> in_split(Split s) const {
        std::vector<ManifestEntry> out;
        for (const auto& e : entries)
            if (e.split == s) out.push_back(e);
        return out;
    }
};

inline int label_from_letter(char c) {
    if (c < 'a' || c > 'z') throw DataError(std::string("label letter out of range: '") + c + "'");
    return c - 'a';
}

/// Class label from the parent directory, which must be a single letter a-z.
inline int label_from_path(const std::filesystem::path& p) {
    const std::string dir = p.parent_path().filename().string();
    if (dir.size() != 1 || dir[0] < 'a' || dir[0] > 'z')
        throw LayoutError("'" + p.string() + "': parent directory '" + dir +
                          "' is not a single letter a-z");
    return dir[0] - 'a';
}

inline LabeledImage load_image(const std::string& path) {
    LabeledImage img;
    img.label = label_from_path(path);
    img.pixels = decode_image(path);
    img.path = path;
    img.source = path;
    return img;
}

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace detail

/// Image paths with labels under root/<letter>/, sorted by path. Class
/// directories may be empty; a non-letter directory is a layout error.
inline std::vector<std::pair<std::string, int>> scan_class_tree(const std::string& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw IoError("dataset root '" + root + "' is not a directory");
    std::vector<std::pair<std::string, int>> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() != 1 || name[0] < 'a' || name[0] > 'z')
            throw LayoutError("directory '" + name + "' under '" + root +
                              "' is not a single letter a-z");
        const int label = name[0] - 'a';
        for (const auto& f : fs::directory_iterator(entry.path()))
            if (f.is_regular_file() && detail::has_image_extension(f.path()))
                out.emplace_back(f.path().string(), label);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// One augmentation method: parameter range and per-original sample count.
/// The integer part of count is guaranteed copies; a fractional remainder is
/// the probability of one more, so expansion factors between whole numbers
/// (like the 6,760 -> 16,496 growth) are expressible.
struct AugmentMethod {
    bool enabled = true;
    double lo = 0.0;
    double hi = 1.0;
    double count = 1.0;
};

struct AugmentPlan {
    AugmentMethod brightness{true, 0.7, 1.3, 1.0};
    AugmentMethod contrast{true, 0.7, 1.3, 1.0};
    AugmentMethod rotation{true, -15.0, 15.0, 1.0};
    AugmentMethod sharpness{true, 0.5, 2.0, 1.0};
    std::uint64_t seed = 42;

    void validate() const {
        for (const auto* m : {&brightness, &contrast, &rotation, &sharpness}) {
            if (m->count < 0.0) throw ConfigError("augment count must be >= 0");
            if (m->lo > m->hi) throw ConfigError("augment range is not well-ordered");
        }
    }
};

namespace detail {

struct MethodApply {
    const char* name;
    const AugmentMethod AugmentPlan::*field;
    Pixels (*apply)(const Pixels&, double);
};

inline const MethodApply kMethods[4] = {
    {"brightness", &AugmentPlan::brightness,
     [](const Pixels& p, double f) { return adjust_brightness(p, static_cast<float>(f)); }},
    {"contrast", &AugmentPlan::contrast,
     [](const Pixels& p, double f) { return adjust_contrast(p, static_cast<float>(f)); }},
    {"rotation", &AugmentPlan::rotation, [](const Pixels& p, double f) { return rotate(p, f); }},
    {"sharpness", &AugmentPlan::sharpness,
     [](const Pixels& p, double f) { return adjust_sharpness(p, static_cast<float>(f)); }},
};

inline std::string augmented_path(const std::string& source, const char* method, std::size_t copy) {
    namespace fs = std::filesystem;
    fs::path p(source);
    fs::path dir = p.parent_path();
    const std::string stem = p.stem().string();
    return (dir / (stem + "__aug_" + method + "_" + std::to_string(copy) + ".png")).string();
}

} // namespace detail

/// Originals plus per-method augmented copies with parameters drawn uniformly
/// from the plan ranges. Output order is (original index, method, copy);
/// every derived image keeps its source's label. Deterministic per seed.
inline std::vector<LabeledImage> augment_dataset(const std::vector<LabeledImage>& images,
                                                 const AugmentPlan& plan) {
    plan.validate();
    std::vector<LabeledImage> out = images;
    for (std::size_t i = 0; i < images.size(); ++i) {
        Rng rng = Rng::derive(plan.seed, i);
        for (const auto& m : detail::kMethods) {
            const AugmentMethod& cfg = plan.*(m.field);
            if (!cfg.enabled) continue;
            std::size_t copies = static_cast<std::size_t>(std::floor(cfg.count));
            const double frac = cfg.count - std::floor(cfg.count);
            if (frac > 0.0 && rng.uniform() < frac) ++copies;
            for (std::size_t c = 0; c < copies; ++c) {
                const double param = rng.uniform(cfg.lo, cfg.hi);
                LabeledImage aug;
                aug.pixels = m.apply(images[i].pixels, param);
                aug.label = images[i].label;
                aug.source = images[i].path;
                aug.method = m.name;
                aug.path = detail::augmented_path(images[i].path, m.name, c);
                out.push_back(std::move(aug));
            }
        }
    }
    return out;
}

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    void validate() const {
        if (train < 0 || val < 0 || test < 0 || std::fabs(train + val + test - 1.0) > 1e-9)
            throw ConfigError("split ratios must be non-negative and sum to 1");
    }
};

/// Pixel-free view used by splitting; augmented items carry their original's
/// path in source.
struct DatasetItem {
    std::string path;
    int label = 0;
    std::string source;
    std::string method = "original";
};

/// paper_faithful: seeded shuffle of the whole pool, cut at floor(r1*n) and
/// floor((r1+r2)*n). leakage_safe: the cut is applied to originals only;
/// augmented copies follow their original into train and are dropped when the
/// original lands in val/test.
inline SplitManifest split_items(const std::vector<DatasetItem>& items, SplitRatios ratios,
                                 std::uint64_t seed, SplitMode mode) {
    ratios.validate();
    if (items.empty()) throw DataError("cannot split an empty dataset");
    SplitManifest manifest;
    manifest.mode = mode;

    auto assign = [&](std::size_t pos, std::size_t n) {
        const auto c1 = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
        const auto c2 = static_cast<std::size_t>(
            std::floor((ratios.train + ratios.val) * static_cast<double>(n)));
        if (pos < c1) return Split::train;
        if (pos < c2) return Split::val;
        return Split::test;
    };

    Rng rng = Rng::derive(seed, 0x5f17);
    if (mode == SplitMode::paper_faithful) {
        std::vector<std::size_t> order(items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<Split> splits(items.size());
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            splits[order[pos]] = assign(pos, order.size());
        for (std::size_t i = 0; i < items.size(); ++i)
            manifest.entries.push_back({items[i].path, items[i].label, splits[i]});
    } else {
        std::vector<std::size_t> originals;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i].method == "original") originals.push_back(i);
        if (originals.empty()) throw DataError("leakage-safe split found no original images");
        std::vector<std::size_t> order(originals.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        std::map<std::string, Split> source_split;
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            source_split[items[originals[order[pos]]].path] = assign(pos, order.size());
        for (const auto& item : items) {
            if (item.method == "original") {
                manifest.entries.push_back({item.path, item.label, source_split.at(item.path)});
            } else {
                auto it = source_split.find(item.source);
                if (it == source_split.end())
                    throw DataError("augmented image '" + item.path +
                                    "' references unknown source '" + item.source + "'");
                if (it->second == Split::train)
                    manifest.entries.push_back({item.path, item.label, Split::train});
            }
        }
    }
    return manifest;
}

inline SplitManifest split_dataset(const std::vector<LabeledImage>& images, SplitRatios ratios,
                                   std::uint64_t seed, SplitMode mode) {
    std::vector<DatasetItem> items;
    items.reserve(images.size());
    for (const auto& img : images)
        items.push_back({img.path, img.label, img.source, img.method});
    return split_items(items, ratios, seed, mode);
}

/// Manifest CSV: header `path,label,split`, letter labels, LF line endings.
inline void write_manifest(const SplitManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << "path,label,split\n";
    for (const auto& e : manifest.entries)
        out << e.path << ',' << static_cast<char>('a' + e.label) << ',' << split_name(e.split)
            << '\n';
    if (!out) throw IoError("manifest write failed for '" + path + "'");
}

inline SplitManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read manifest '" + path + "'");
    SplitManifest manifest;
    std::string line;
    if (!std::getline(in, line) || line.rfind("path,label,split", 0) != 0)
        throw DataError("manifest '" + path + "' missing path,label,split header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c2 = line.rfind(',');
        const auto c1 = c2 == std::string::npos ? std::string::npos : line.rfind(',', c2 - 1);
        if (c1 == std::string::npos || c1 == 0)
            throw DataError("manifest '" + path + "' line " + std::to_string(lineno) + " malformed");
        const std::string p = line.substr(0, c1);
        const std::string lab = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string sp = line.substr(c2 + 1);
        if (lab.size() != 1) throw DataError("manifest label must be a single letter, line " +
                                             std::to_string(lineno));
        ManifestEntry e;
        e.path = p;
        e.label = label_from_letter(lab[0]);
        if (sp == "train") e.split = Split::train;
        else if (sp == "val") e.split = Split::val;
        else if (sp == "test") e.split = Split::test;
        else throw DataError("manifest split '" + sp + "' unknown, line " + std::to_string(lineno));
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

/// Provenance CSV emitted by the augment stage: `path,label,method,source`.
inline void write_provenance(const std::vector<LabeledImage>& images, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write provenance '" + path + "'");
    out << "path,label,method,source\n";
    for (const auto& img : images)
        out << img.path << ',' << static_cast<char>('a' + img.label) << ',' << img.method << ','
            << img.source << '\n';
    if (!out) throw IoError("provenance write failed for '" + path + "'");
}

inline std::vector<DatasetItem> read_provenance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read provenance '" + path + "'");
    std::vector<DatasetItem> items;
    std::string line;
    if (!std::getline(in, line) || line.rfind("path,label,method,source", 0) != 0)
        throw DataError("provenance '" + path + "' missing expected header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (int c = 0; c < 3; ++c) {
            const auto pos = line.find(',', start);
            if (pos == std::string::npos)
                throw DataError("provenance '" + path + "' line " + std::to_string(lineno) +
                                " malformed");
            cols.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        cols.push_back(line.substr(start));
        if (cols[1].size() != 1)
            throw DataError("provenance label must be a single letter, line " +
                            std::to_string(lineno));
        items.push_back({cols[0], label_from_letter(cols[1][0]), cols[3], cols[2]});
    }
    return items;
}

} // namespace glyphforge
