// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splat2twin/trimesh.hpp"

namespace s2t {

/// Quadric-error-metric edge-collapse decimation down to at most
/// target_faces faces. Collapses that would flip a face normal, create a
/// degenerate face, or break the edge link condition are refused, so
/// topology is preserved and closed input stays closed. Stops early (with a
/// warning) when no further collapse is admissible; the returned face count
/// reports what was achieved. Deterministic: equal-cost candidates are
/// ordered by vertex indices.
TriMesh decimate(const TriMesh& mesh, int target_faces);

}  // namespace s2t
