// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splat2twin/trimesh.hpp"

#include <string>

namespace s2t {

enum class MeshFormat { Obj, StlBinary };

/// OBJ: ASCII "v"/"f" records with 1-based indices, coordinates printed with
/// round-trip precision. STL: binary, 80-byte header + uint32 count +
/// 50-byte triangle records (computed unit normals, attribute 0).
void export_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format);

/// Re-imports an OBJ written by export_mesh (vertices and faces only;
/// polygons are fan-triangulated). Exact round trip for our own output.
TriMesh import_obj(const std::string& path);

}  // namespace s2t
