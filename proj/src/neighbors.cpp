// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/neighbors.hpp"

#include "splat2twin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace s2t {

namespace {

// Disjoint-set over point indices; path halving + union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<int> parent_;
    std::vector<int> size_;
};

// Canonical cluster numbering: ids ascend with each cluster's smallest
// member index; noise stays -1.
std::vector<int> canonicalize(const std::vector<int>& raw, std::size_t n) {
    std::vector<int> out(n, -1);
    std::unordered_map<int, int> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (raw[i] < 0) continue;
        const auto [it, inserted] = seen.emplace(raw[i], int(seen.size()));
        out[i] = it->second;
    }
    return out;
}

}  // namespace

PointGrid::PointGrid(const std::vector<Eigen::Vector3d>& points, double cell_size)
    : points_(points), cell_(cell_size) {
    if (!(cell_ > 0.0)) throw ArgumentError("PointGrid: cell size must be positive");
    cells_.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        const std::int64_t c[3] = {coord(p.x()), coord(p.y()), coord(p.z())};
        for (int axis = 0; axis < 3; ++axis) {
            if (i == 0 || c[axis] < cmin_[axis]) cmin_[axis] = c[axis];
            if (i == 0 || c[axis] > cmax_[axis]) cmax_[axis] = c[axis];
        }
        cells_[key_of(c[0], c[1], c[2])].push_back(int(i));
    }
}

std::int64_t PointGrid::coord(double v) const { return std::int64_t(std::floor(v / cell_)); }

std::uint64_t PointGrid::key_of(std::int64_t cx, std::int64_t cy, std::int64_t cz) const {
    // 21 bits per axis with offset; scene coordinates in metres stay far
    // inside the representable range for any sane cell size.
    const std::uint64_t bias = 1u << 20;
    return ((std::uint64_t(cx) + bias) & 0x1FFFFF) | (((std::uint64_t(cy) + bias) & 0x1FFFFF) << 21) |
           (((std::uint64_t(cz) + bias) & 0x1FFFFF) << 42);
}

const std::vector<int>* PointGrid::cell_at(std::int64_t cx, std::int64_t cy,
                                           std::int64_t cz) const {
    const auto it = cells_.find(key_of(cx, cy, cz));
    return it == cells_.end() ? nullptr : &it->second;
}

std::vector<int> PointGrid::radius_neighbors(const Eigen::Vector3d& q, double radius) const {
    std::vector<int> out;
    const double r2 = radius * radius;
    const std::int64_t x0 = coord(q.x() - radius), x1 = coord(q.x() + radius);
    const std::int64_t y0 = coord(q.y() - radius), y1 = coord(q.y() + radius);
    const std::int64_t z0 = coord(q.z() - radius), z1 = coord(q.z() + radius);
    for (std::int64_t cz = z0; cz <= z1; ++cz)
        for (std::int64_t cy = y0; cy <= y1; ++cy)
            for (std::int64_t cx = x0; cx <= x1; ++cx) {
                const auto* bucket = cell_at(cx, cy, cz);
                if (!bucket) continue;
                for (int idx : *bucket)
                    if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
            }
    std::sort(out.begin(), out.end());
    return out;
}

int PointGrid::radius_count(const Eigen::Vector3d& q, double radius) const {
    int count = 0;
    const double r2 = radius * radius;
    const std::int64_t x0 = coord(q.x() - radius), x1 = coord(q.x() + radius);
    const std::int64_t y0 = coord(q.y() - radius), y1 = coord(q.y() + radius);
    const std::int64_t z0 = coord(q.z() - radius), z1 = coord(q.z() + radius);
    for (std::int64_t cz = z0; cz <= z1; ++cz)
        for (std::int64_t cy = y0; cy <= y1; ++cy)
            for (std::int64_t cx = x0; cx <= x1; ++cx) {
                const auto* bucket = cell_at(cx, cy, cz);
                if (!bucket) continue;
                for (int idx : *bucket)
                    if ((points_[idx] - q).squaredNorm() <= r2) ++count;
            }
    return count;
}

std::vector<std::pair<double, int>> PointGrid::knn(const Eigen::Vector3d& q, int k,
                                                   int exclude_index) const {
    std::vector<std::pair<double, int>> found;
    if (k <= 0 || points_.empty()) return found;
    const int avail = int(points_.size()) - (exclude_index >= 0 ? 1 : 0);
    if (avail <= 0) return found;
    const int want = std::min(k, avail);
    const std::int64_t qx = coord(q.x()), qy = coord(q.y()), qz = coord(q.z());

    const auto consider = [&](const std::vector<int>* bucket) {
        if (!bucket) return;
        for (int idx : *bucket) {
            if (idx == exclude_index) continue;
            found.emplace_back((points_[idx] - q).squaredNorm(), idx);
        }
    };

    // Queries well outside the occupied region degrade to a linear scan;
    // shell walking would otherwise crawl cell by cell across empty space.
    const std::int64_t outside =
        std::max({cmin_[0] - qx, qx - cmax_[0], cmin_[1] - qy, qy - cmax_[1], cmin_[2] - qz,
                  qz - cmax_[2], std::int64_t(0)});
    if (outside > 2) {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (int(i) == exclude_index) continue;
            found.emplace_back((points_[i] - q).squaredNorm(), int(i));
        }
        std::sort(found.begin(), found.end());
        found.resize(std::size_t(want));
        return found;
    }

    // Expanding Chebyshev shells, clipped to the occupied cell box. A point
    // beyond shell `ring` lies farther than ring*cell, so the walk stops as
    // soon as the k-th best distance is certified. Each cell is visited once.
    std::int64_t ring_end = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const std::int64_t qc = axis == 0 ? qx : (axis == 1 ? qy : qz);
        ring_end = std::max(ring_end, std::max(qc - cmin_[axis], cmax_[axis] - qc));
    }
    for (std::int64_t ring = 0; ring <= ring_end; ++ring) {
        if (ring == 0) {
            consider(cell_at(qx, qy, qz));
        } else {
            const std::int64_t x0 = std::max(qx - ring, cmin_[0]),
                               x1 = std::min(qx + ring, cmax_[0]);
            const std::int64_t y0 = std::max(qy - ring, cmin_[1]),
                               y1 = std::min(qy + ring, cmax_[1]);
            // Top/bottom z faces: full clipped x,y rectangle.
            for (std::int64_t cz : {qz - ring, qz + ring}) {
                if (cz < cmin_[2] || cz > cmax_[2]) continue;
                for (std::int64_t cy = y0; cy <= y1; ++cy)
                    for (std::int64_t cx = x0; cx <= x1; ++cx) consider(cell_at(cx, cy, cz));
            }
            // Side faces: z strictly inside the shell.
            const std::int64_t z0 = std::max(qz - ring + 1, cmin_[2]),
                               z1 = std::min(qz + ring - 1, cmax_[2]);
            for (std::int64_t cz = z0; cz <= z1; ++cz) {
                for (std::int64_t cy : {qy - ring, qy + ring}) {
                    if (cy < cmin_[1] || cy > cmax_[1]) continue;
                    for (std::int64_t cx = x0; cx <= x1; ++cx) consider(cell_at(cx, cy, cz));
                }
                const std::int64_t yy0 = std::max(qy - ring + 1, cmin_[1]),
                                   yy1 = std::min(qy + ring - 1, cmax_[1]);
                for (std::int64_t cy = yy0; cy <= yy1; ++cy)
                    for (std::int64_t cx : {qx - ring, qx + ring}) {
                        if (cx < cmin_[0] || cx > cmax_[0]) continue;
                        consider(cell_at(cx, cy, cz));
                    }
            }
        }
        if (int(found.size()) >= want) {
            std::sort(found.begin(), found.end());
            const double safe = double(ring) * cell_;
            if (found[std::size_t(want) - 1].first <= safe * safe) break;
        }
    }
    std::sort(found.begin(), found.end());
    if (int(found.size()) > want) found.resize(std::size_t(want));
    return found;
}

int PointGrid::nearest(const Eigen::Vector3d& q) const {
    const auto hits = knn(q, 1);
    return hits.empty() ? -1 : hits.front().second;
}

std::vector<int> dbscan(const std::vector<Eigen::Vector3d>& points, double eps, int min_samples) {
    if (!(eps > 0.0)) throw ArgumentError("dbscan: eps must be positive");
    if (min_samples < 1) throw ArgumentError("dbscan: min_samples must be positive");
    const int n = int(points.size());
    std::vector<int> labels(std::size_t(n), -1);
    if (n == 0) return labels;

    const PointGrid grid(points, eps);
    std::vector<char> core(std::size_t(n), 0);
    std::vector<std::vector<int>> neighborhoods{std::size_t(n)};
    for (int i = 0; i < n; ++i) {
        neighborhoods[i] = grid.radius_neighbors(points[i], eps);
        core[i] = int(neighborhoods[i].size()) >= min_samples;
    }

    UnionFind uf{std::size_t(n)};
    for (int i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (int j : neighborhoods[i])
            if (j > i && core[j]) uf.unite(i, j);
    }

    std::vector<int> raw(std::size_t(n), -1);
    for (int i = 0; i < n; ++i) {
        if (core[i]) {
            raw[i] = uf.find(i);
        } else {
            for (int j : neighborhoods[i]) {  // ascending, so first core = lowest index
                if (core[j]) {
                    raw[i] = uf.find(j);
                    break;
                }
            }
        }
    }
    return canonicalize(std::move(raw), std::size_t(n));
}

std::vector<int> dbscan_1d(const std::vector<double>& values, double eps, int min_samples) {
    if (!(eps > 0.0)) throw ArgumentError("dbscan_1d: eps must be positive");
    if (min_samples < 1) throw ArgumentError("dbscan_1d: min_samples must be positive");
    const int n = int(values.size());
    std::vector<int> labels(std::size_t(n), -1);
    if (n == 0) return labels;

    std::vector<int> order(std::size_t(n), 0);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });

    // Window counts via two pointers.
    std::vector<char> core(std::size_t(n), 0);
    {
        int lo = 0, hi = 0;
        for (int s = 0; s < n; ++s) {
            const double v = values[order[s]];
            while (values[order[lo]] < v - eps) ++lo;
            if (hi < s) hi = s;
            while (hi + 1 < n && values[order[hi + 1]] <= v + eps) ++hi;
            core[order[s]] = (hi - lo + 1) >= min_samples;
        }
    }

    // Core runs: consecutive (in sorted order) cores closer than eps share a
    // cluster; in 1-D no other core can bridge a larger gap.
    std::vector<int> raw(std::size_t(n), -1);
    std::vector<int> sorted_core_pos;  // positions in `order` that are cores
    for (int s = 0; s < n; ++s)
        if (core[order[s]]) sorted_core_pos.push_back(s);
    int run_id = -1;
    double prev_value = 0.0;
    std::vector<int> run_of_core(sorted_core_pos.size(), 0);
    for (std::size_t c = 0; c < sorted_core_pos.size(); ++c) {
        const double v = values[order[sorted_core_pos[c]]];
        if (c == 0 || v - prev_value > eps) ++run_id;
        run_of_core[c] = run_id;
        prev_value = v;
        raw[order[sorted_core_pos[c]]] = run_id;
    }

    // Border points: lowest-original-index core within +-eps. A sparse table
    // over the sorted cores answers the range-min in O(1).
    if (!sorted_core_pos.empty()) {
        const int m = int(sorted_core_pos.size());
        const int levels = 32 - __builtin_clz(unsigned(m));
        std::vector<std::vector<int>> table(std::size_t(levels),
                                            std::vector<int>(std::size_t(m), 0));
        for (int c = 0; c < m; ++c) table[0][c] = order[sorted_core_pos[c]];
        for (int l = 1; l < levels; ++l)
            for (int c = 0; c + (1 << l) <= m; ++c)
                table[l][c] = std::min(table[l - 1][c], table[l - 1][c + (1 << (l - 1))]);
        const auto range_min = [&](int lo, int hi) {  // inclusive, lo <= hi
            const int l = 31 - __builtin_clz(unsigned(hi - lo + 1));
            return std::min(table[l][lo], table[l][hi - (1 << l) + 1]);
        };
        std::vector<double> core_values(std::size_t(m), 0.0);
        for (int c = 0; c < m; ++c) core_values[c] = values[order[sorted_core_pos[c]]];
        std::vector<int> core_index_to_run(std::size_t(n), -1);
        for (int c = 0; c < m; ++c) core_index_to_run[table[0][c]] = run_of_core[c];

        for (int i = 0; i < n; ++i) {
            if (core[i]) continue;
            const double v = values[i];
            const auto lo_it = std::lower_bound(core_values.begin(), core_values.end(), v - eps);
            const auto hi_it = std::upper_bound(core_values.begin(), core_values.end(), v + eps);
            if (lo_it == hi_it) continue;  // noise
            const int lo = int(lo_it - core_values.begin());
            const int hi = int(hi_it - core_values.begin()) - 1;
            const int owner = range_min(lo, hi);
            raw[i] = core_index_to_run[owner];
        }
    }
    return canonicalize(std::move(raw), std::size_t(n));
}

}  // namespace s2t
