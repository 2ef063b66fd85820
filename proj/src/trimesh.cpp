// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/trimesh.hpp"

#include "splat2twin/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

namespace s2t {

void TriMesh::validate() const {
    const int n = int(vertices.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& [a, b, c] = faces[f];
        if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n)
            throw ValidationError("face " + std::to_string(f) + " references a missing vertex");
        if (a == b || b == c || a == c)
            throw ValidationError("face " + std::to_string(f) + " repeats a vertex");
    }
}

namespace {

// Undirected edge key -> list of (face, direction) incidences.
std::map<std::pair<int, int>, std::vector<std::pair<int, bool>>> edge_incidence(
    const TriMesh& mesh) {
    std::map<std::pair<int, int>, std::vector<std::pair<int, bool>>> edges;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int k = 0; k < 3; ++k) {
            const int u = face[std::size_t(k)];
            const int v = face[std::size_t((k + 1) % 3)];
            const bool forward = u < v;
            edges[{std::min(u, v), std::max(u, v)}].emplace_back(int(f), forward);
        }
    }
    return edges;
}

}  // namespace

bool is_closed(const TriMesh& mesh) {
    if (mesh.faces.empty()) return false;
    for (const auto& [edge, inc] : edge_incidence(mesh))
        if (inc.size() != 2) return false;
    return true;
}

bool is_edge_manifold(const TriMesh& mesh) {
    for (const auto& [edge, inc] : edge_incidence(mesh)) {
        if (inc.size() > 2) return false;
        if (inc.size() == 2 && inc[0].second == inc[1].second) return false;
    }
    return true;
}

int euler_characteristic(const TriMesh& mesh) {
    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& f : mesh.faces)
        for (int v : f) used[std::size_t(v)] = 1;
    const long v = std::count(used.begin(), used.end(), char(1));
    const long e = long(edge_incidence(mesh).size());
    const long f = long(mesh.faces.size());
    return int(v - e + f);
}

int connected_component_count(const TriMesh& mesh) {
    const std::size_t n = mesh.faces.size();
    if (n == 0) return 0;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[std::size_t(x)] != x) {
            parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
            x = parent[std::size_t(x)];
        }
        return x;
    };
    for (const auto& [edge, inc] : edge_incidence(mesh))
        for (std::size_t k = 1; k < inc.size(); ++k) {
            const int a = find(inc[0].first), b = find(inc[k].first);
            if (a != b) parent[std::size_t(b)] = a;
        }
    int count = 0;
    for (std::size_t f = 0; f < n; ++f)
        if (find(int(f)) == int(f)) ++count;
    return count;
}

double signed_volume(const TriMesh& mesh) {
    double six_v = 0.0;
    for (const auto& [a, b, c] : mesh.faces)
        six_v += mesh.vertices[std::size_t(a)].dot(
            mesh.vertices[std::size_t(b)].cross(mesh.vertices[std::size_t(c)]));
    return six_v / 6.0;
}

double surface_area(const TriMesh& mesh) {
    double area = 0.0;
    for (const auto& [a, b, c] : mesh.faces) {
        const Eigen::Vector3d u = mesh.vertices[std::size_t(b)] - mesh.vertices[std::size_t(a)];
        const Eigen::Vector3d v = mesh.vertices[std::size_t(c)] - mesh.vertices[std::size_t(a)];
        area += 0.5 * u.cross(v).norm();
    }
    return area;
}

void flip_faces(TriMesh& mesh) {
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);
}

}  // namespace s2t
