// SPDX-License-Identifier: Apache-2.0
//
// Deterministic spatial queries over 3-D point sets: uniform-grid radius and
// k-nearest-neighbour search, plus DBSCAN in 1-D and 3-D.
//
// DBSCAN conventions (shared with the brute-force test oracle):
//   * the eps-neighbourhood of a point includes the point itself;
//   * clusters are the connected components of core points under eps
//     adjacency;
//   * a border point joins the cluster of the lowest-index core point that
//     reaches it; non-core points with no core neighbour are noise (-1);
//   * cluster ids are assigned in ascending order of each cluster's smallest
//     member index.

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace s2t {

/// Uniform hash grid over a fixed point set.
class PointGrid {
public:
    PointGrid(const std::vector<Eigen::Vector3d>& points, double cell_size);

    /// Indices of points with |p - q| <= radius, ascending index order.
    std::vector<int> radius_neighbors(const Eigen::Vector3d& q, double radius) const;

    /// Count of points with |p - q| <= radius (including q itself when q is
    /// a member of the set).
    int radius_count(const Eigen::Vector3d& q, double radius) const;

    /// The k nearest points to q as (squared distance, index), ascending,
    /// ties broken by index. exclude_index (if >= 0) is skipped. Returns
    /// fewer than k entries when the set is too small.
    std::vector<std::pair<double, int>> knn(const Eigen::Vector3d& q, int k,
                                            int exclude_index = -1) const;

    /// Index of the nearest point to q, or -1 for an empty set.
    int nearest(const Eigen::Vector3d& q) const;

    const std::vector<Eigen::Vector3d>& points() const { return points_; }

private:
    std::vector<Eigen::Vector3d> points_;
    double cell_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
    std::int64_t cmin_[3] = {0, 0, 0};  // occupied cell bounds
    std::int64_t cmax_[3] = {0, 0, 0};

    std::int64_t coord(double v) const;
    std::uint64_t key_of(std::int64_t cx, std::int64_t cy, std::int64_t cz) const;
    const std::vector<int>* cell_at(std::int64_t cx, std::int64_t cy, std::int64_t cz) const;
};

/// 3-D DBSCAN; labels as described above. O(n * neighbourhood size).
std::vector<int> dbscan(const std::vector<Eigen::Vector3d>& points, double eps, int min_samples);

/// 1-D DBSCAN over scalars with the identical cluster definition,
/// implemented by sorting (O(n log n)).
std::vector<int> dbscan_1d(const std::vector<double>& values, double eps, int min_samples);

}  // namespace s2t
