// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace s2t {

/// File/stream level failure (unreadable path, truncated payload, ...).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structural mismatch in an input file (missing PLY property, bad JSON key, ...).
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Data that parses but violates an invariant (NaN position, non-orthonormal pose, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller passed an argument outside an operation's precondition.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Geometric input too degenerate for the requested operation
/// (fewer than 4 points, all coplanar, ...). Callers may fall back to
/// convex-hull-of-points meshing.
class DegenerateInputError : public std::runtime_error {
public:
    explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Alpha-shape extraction kept no cells; retry with a larger alpha.
class EmptyMeshError : public std::runtime_error {
public:
    explicit EmptyMeshError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace s2t
