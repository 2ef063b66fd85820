// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splat2twin/camera.hpp"
#include "splat2twin/splat.hpp"

#include <limits>
#include <vector>

namespace s2t {

/// Per-pixel minimum camera depth. Pixels no splat covers hold +infinity.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> depth;  // row-major, width*height

    static constexpr float kEmpty = std::numeric_limits<float>::infinity();

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), depth(std::size_t(w) * h, kEmpty) {}

    float at(int x, int y) const { return depth[std::size_t(y) * width + x]; }
    float& at(int x, int y) { return depth[std::size_t(y) * width + x]; }
    bool is_empty(int x, int y) const { return !(at(x, y) < kEmpty); }
};

/// Splats every primitive with activated opacity >= alpha_min as an opaque
/// disc of pixel radius max(1, 2*max(scale)*max(fx,fy)/depth) around its
/// projected centre; covered pixels keep the minimum depth. A pixel cell is
/// covered when the cell rectangle intersects the disc, so the cell holding
/// the projection itself is always covered (self-visibility under no
/// occlusion). Order-independent and deterministic.
DepthMap render_depth(const CameraView& view, const SplatCloud& cloud, double alpha_min);

/// Depth-consistency visibility gate: true iff the point projects in-frustum,
/// its pixel holds a non-empty depth sample, and |z - depth| <= tau_depth.
bool is_visible(const CameraView& view, const DepthMap& depth_map, const Eigen::Vector3d& point,
                double tau_depth);

/// Pointwise minimum of two maps of equal dimensions.
DepthMap merge_min(const DepthMap& a, const DepthMap& b);

}  // namespace s2t
