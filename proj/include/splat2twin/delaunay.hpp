// SPDX-License-Identifier: Apache-2.0
//
// Incremental (Bowyer-Watson) 3-D Delaunay tetrahedralization over exact
// predicates, with an explicit infinite vertex so outside-hull insertions
// and cospherical inputs are handled without a finite super-tetrahedron.

#pragma once

#include "splat2twin/trimesh.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace s2t {

struct Tetrahedralization {
    std::vector<Eigen::Vector3d> points;        // input points, original order
    std::vector<std::array<int, 4>> tets;       // finite cells, positively oriented
    std::vector<std::array<int, 4>> neighbors;  // across facet opposite slot k; -1 = hull

    std::size_t cell_count() const { return tets.size(); }

    /// Circumcenter and circumradius of a cell (double precision).
    std::pair<Eigen::Vector3d, double> circumsphere(std::size_t cell) const;
};

/// Builds the Delaunay tetrahedralization. Points are deduplicated
/// (cells reference the first occurrence) and internally inserted in Morton
/// order, so the result is deterministic for a fixed input sequence.
/// The empty-circumsphere property holds exactly: no input point lies
/// strictly inside any cell's circumsphere.
/// Throws DegenerateInputError for fewer than 4 distinct points or
/// all-coplanar input; callers may fall back to convex-hull meshing.
Tetrahedralization delaunay3d(const std::vector<Eigen::Vector3d>& points);

}  // namespace s2t
