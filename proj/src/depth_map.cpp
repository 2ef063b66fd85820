// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/depth_map.hpp"

#include "splat2twin/errors.hpp"

#include <algorithm>
#include <cmath>

namespace s2t {

DepthMap render_depth(const CameraView& view, const SplatCloud& cloud, double alpha_min) {
    if (!(alpha_min >= 0.0 && alpha_min <= 1.0))
        throw ArgumentError("render_depth: alpha_min must lie in [0,1]");
    DepthMap map(view.width, view.height);
    const double f = std::max(view.fx, view.fy);
    for (const auto& splat : cloud.splats) {
        if (splat.opacity() < alpha_min) continue;
        const auto hit = project(view, splat.centre());
        if (!hit) continue;
        const double radius = std::max(1.0, 2.0 * splat.scale().maxCoeff() * f / hit->depth);
        const float z = static_cast<float>(hit->depth);
        const int x0 = std::max(0, int(std::floor(hit->u - radius)));
        const int x1 = std::min(view.width - 1, int(std::floor(hit->u + radius)));
        const int y0 = std::max(0, int(std::floor(hit->v - radius)));
        const int y1 = std::min(view.height - 1, int(std::floor(hit->v + radius)));
        const double r2 = radius * radius;
        for (int y = y0; y <= y1; ++y) {
            // Closest point of the cell [x,x+1)x[y,y+1) to the disc centre.
            const double dy = hit->v - std::clamp(hit->v, double(y), double(y + 1));
            for (int x = x0; x <= x1; ++x) {
                const double dx = hit->u - std::clamp(hit->u, double(x), double(x + 1));
                if (dx * dx + dy * dy > r2) continue;
                float& cell = map.at(x, y);
                cell = std::min(cell, z);
            }
        }
    }
    return map;
}

bool is_visible(const CameraView& view, const DepthMap& depth_map, const Eigen::Vector3d& point,
                double tau_depth) {
    const auto hit = project(view, point);
    if (!hit) return false;
    const int x = int(std::floor(hit->u));
    const int y = int(std::floor(hit->v));
    if (depth_map.is_empty(x, y)) return false;
    return std::abs(hit->depth - double(depth_map.at(x, y))) <= tau_depth;
}

DepthMap merge_min(const DepthMap& a, const DepthMap& b) {
    if (a.width != b.width || a.height != b.height)
        throw ArgumentError("merge_min: dimension mismatch");
    DepthMap out(a.width, a.height);
    for (std::size_t i = 0; i < out.depth.size(); ++i)
        out.depth[i] = std::min(a.depth[i], b.depth[i]);
    return out;
}

}  // namespace s2t
