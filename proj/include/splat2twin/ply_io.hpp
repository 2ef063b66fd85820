// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact ingestion/emission of the standard 3DGS binary little-endian
// PLY layout: x y z [nx ny nz] f_dc_0..2 [f_rest_*] opacity scale_0..2 rot_0..3.

#pragma once

#include "splat2twin/splat.hpp"

#include <string>

namespace s2t {

/// Loads a 3DGS PLY. Properties are located by name, so any header order is
/// accepted; normals are ignored and unknown scalar properties are skipped
/// with a warning. Throws SchemaError (missing/odd property), IoError
/// (unreadable or truncated file, message carries the byte offset) or
/// ValidationError (non-finite payload, message carries the splat index).
SplatCloud load_ply(const std::string& path);

/// Writes the canonical property order with the raw float payload verbatim,
/// so save(load(f)) reproduces f's bytes for every required property.
void save_ply(const SplatCloud& cloud, const std::string& path);

}  // namespace s2t
