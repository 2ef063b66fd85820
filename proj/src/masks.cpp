// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/masks.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

namespace s2t {

namespace fs = std::filesystem;
using nlohmann::json;

int MaskSet::label_index(const std::string& name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == name) return int(i);
    return -1;
}

const Image8* MaskSet::mask(const std::string& view_id, int label) const {
    const auto it = masks.find({view_id, label});
    return it == masks.end() ? nullptr : &it->second;
}

void MaskSet::validate_against(const std::vector<CameraView>& views) const {
    std::map<std::string, const CameraView*> by_id;
    for (const auto& v : views) by_id[v.view_id] = &v;
    for (const auto& [key, image] : masks) {
        const auto it = by_id.find(key.first);
        if (it == by_id.end())
            throw ValidationError("mask references unknown view '" + key.first + "'");
        if (image.width != it->second->width || image.height != it->second->height)
            throw ValidationError("mask for view '" + key.first + "', label '" +
                                  labels[std::size_t(key.second)] +
                                  "' does not match the view dimensions");
    }
}

namespace {

struct MaskEntry {
    std::string view_id;
    std::string label;
    std::string file;
};

std::vector<MaskEntry> entries_from_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError(manifest.string() + ": cannot open for reading");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SchemaError(manifest.string() + ": invalid JSON (" + e.what() + ")");
    }
    std::vector<MaskEntry> out;
    for (const auto& jm : doc.at("masks")) {
        out.push_back({jm.at("view_id").get<std::string>(), jm.at("label").get<std::string>(),
                       jm.at("file").get<std::string>()});
    }
    return out;
}

std::vector<MaskEntry> entries_from_names(const fs::path& dir) {
    std::vector<MaskEntry> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        const std::string ext = p.extension().string();
        if (ext != ".png" && ext != ".pgm") continue;
        const std::string stem = p.stem().string();
        const auto sep = stem.find("__");
        if (sep == std::string::npos || sep == 0 || sep + 2 >= stem.size()) {
            log::warn(p.string() + ": name does not match <view_id>__<label>, skipping");
            continue;
        }
        out.push_back({stem.substr(0, sep), stem.substr(sep + 2), p.filename().string()});
    }
    return out;
}

}  // namespace

MaskSet load_masks(const std::string& dir, const std::vector<CameraView>& views) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw IoError(dir + ": masks directory does not exist");

    const fs::path manifest = root / "masks.json";
    const auto entries =
        fs::exists(manifest) ? entries_from_manifest(manifest) : entries_from_names(root);
    if (entries.empty()) throw SchemaError(dir + ": no masks found");

    MaskSet set;
    set.labels.push_back("background");
    std::set<std::string> names;
    for (const auto& e : entries) {
        if (e.label == "background")
            throw SchemaError(dir + ": 'background' is reserved and cannot own a mask");
        names.insert(e.label);
    }
    for (const auto& n : names) set.labels.push_back(n);

    for (const auto& e : entries) {
        const int label = set.label_index(e.label);
        const auto key = std::make_pair(e.view_id, label);
        if (set.masks.count(key))
            throw SchemaError(dir + ": duplicate mask for view '" + e.view_id + "', label '" +
                              e.label + "'");
        set.masks.emplace(key, load_image((root / e.file).string()));
    }
    set.validate_against(views);
    return set;
}

}  // namespace s2t
