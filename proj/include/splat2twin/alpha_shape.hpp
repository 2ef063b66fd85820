// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splat2twin/delaunay.hpp"
#include "splat2twin/trimesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace s2t {

/// Alpha-complex boundary extraction: keeps cells with circumradius <= alpha
/// (pass infinity to keep everything, which yields the convex hull) and
/// returns the facets incident to exactly one kept cell. Vertices are
/// compacted to the referenced set; faces carry the kept cell as provenance
/// and are oriented outward (away from their cell). When the result is
/// closed but inverted, it is flipped so the enclosed volume is positive.
/// Throws EmptyMeshError when no cell survives.
TriMesh alpha_shape(const Tetrahedralization& tets, double alpha);

/// Heuristic alpha: scale * median nearest-neighbour distance (default 3).
/// Throws DegenerateInputError when fewer than 2 points or every
/// nearest-neighbour distance is zero (duplicate-only input).
double suggest_alpha(const std::vector<Eigen::Vector3d>& points, double scale = 3.0);

}  // namespace s2t
