// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace s2t {

/// Indexed triangle mesh. Faces are counter-clockwise seen from outside
/// when the mesh is closed and consistently oriented.
struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<int> face_source_cell;  // originating tetrahedron id, optional

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }

    /// Throws ValidationError on out-of-range or degenerate (repeated-vertex)
    /// faces.
    void validate() const;
};

/// True iff every edge is shared by exactly two faces.
bool is_closed(const TriMesh& mesh);

/// True iff every edge is shared by at most two faces and adjacent faces
/// traverse shared edges in opposite directions (consistent orientation).
bool is_edge_manifold(const TriMesh& mesh);

/// V - E + F over the whole mesh (2 for a single sphere-topology component).
int euler_characteristic(const TriMesh& mesh);

/// Number of edge-connected face components.
int connected_component_count(const TriMesh& mesh);

/// Signed enclosed volume by the divergence theorem; meaningful for closed,
/// consistently oriented meshes (positive when normals point outward).
double signed_volume(const TriMesh& mesh);

double surface_area(const TriMesh& mesh);

/// Flips every face (reverses orientation) in place.
void flip_faces(TriMesh& mesh);

}  // namespace s2t
