// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splat2twin/camera.hpp"
#include "splat2twin/image.hpp"

#include <map>
#include <string>
#include <vector>

namespace s2t {

/// Per-view, per-label binary masks. Label index 0 is the reserved
/// "background" label and never owns a mask; object labels start at 1.
struct MaskSet {
    std::vector<std::string> labels;  // labels[0] == "background"
    std::map<std::pair<std::string, int>, Image8> masks;  // (view_id, label idx) -> mask

    int label_index(const std::string& name) const;  // -1 when unknown
    const Image8* mask(const std::string& view_id, int label) const;
    std::size_t object_label_count() const { return labels.size() - 1; }

    /// Every mask must match its view's dimensions.
    void validate_against(const std::vector<CameraView>& views) const;
};

/// Loads masks named `<view_id>__<label>.png` (or .pgm) from a directory.
/// A `masks.json` manifest ({"masks": [{view_id, label, file}, ...]}), when
/// present, overrides the naming convention. Labels are ordered background
/// first, then lexicographically. Throws IoError when the directory is
/// missing and SchemaError when it contains no usable masks.
MaskSet load_masks(const std::string& dir, const std::vector<CameraView>& views);

}  // namespace s2t
