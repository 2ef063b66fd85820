// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/alpha_shape.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"
#include "splat2twin/neighbors.hpp"

#include <algorithm>
#include <cmath>

namespace s2t {

namespace {

// Facet opposite slot k, ordered to face the opposite vertex (matches the
// cell orientation convention of delaunay3d).
constexpr int kFacet[4][3] = {{2, 1, 3}, {0, 2, 3}, {1, 0, 3}, {0, 1, 2}};

}  // namespace

TriMesh alpha_shape(const Tetrahedralization& tets, double alpha) {
    if (!(alpha > 0.0)) throw ArgumentError("alpha_shape: alpha must be positive");

    std::vector<char> kept(tets.cell_count(), 0);
    std::size_t kept_count = 0;
    for (std::size_t c = 0; c < tets.cell_count(); ++c) {
        if (std::isinf(alpha)) {
            kept[c] = 1;
        } else {
            kept[c] = tets.circumsphere(c).second <= alpha;
        }
        kept_count += kept[c];
    }
    if (kept_count == 0)
        throw EmptyMeshError("alpha_shape: no cell has circumradius <= " + std::to_string(alpha) +
                             "; retry with a larger alpha");

    TriMesh mesh;
    std::vector<int> vertex_map(tets.points.size(), -1);
    for (std::size_t c = 0; c < tets.cell_count(); ++c) {
        if (!kept[c]) continue;
        for (int k = 0; k < 4; ++k) {
            const int n = tets.neighbors[c][std::size_t(k)];
            if (n >= 0 && kept[std::size_t(n)]) continue;  // interior facet of the complex
            // The facet faces the opposite vertex of the kept cell, i.e.
            // inward; reverse it so the surface normal points away from the
            // kept solid.
            std::array<int, 3> face;
            for (int j = 0; j < 3; ++j)
                face[std::size_t(j)] = tets.tets[c][std::size_t(kFacet[k][j])];
            std::swap(face[1], face[2]);
            for (int& v : face) {
                if (vertex_map[std::size_t(v)] < 0) {
                    vertex_map[std::size_t(v)] = int(mesh.vertices.size());
                    mesh.vertices.push_back(tets.points[std::size_t(v)]);
                }
                v = vertex_map[std::size_t(v)];
            }
            mesh.faces.push_back(face);
            mesh.face_source_cell.push_back(int(c));
        }
    }

    if (is_closed(mesh) && signed_volume(mesh) < 0.0) flip_faces(mesh);
    if (!is_closed(mesh))
        log::warn("alpha_shape: extracted surface is not closed (" +
                  std::to_string(mesh.face_count()) + " faces)");
    return mesh;
}

double suggest_alpha(const std::vector<Eigen::Vector3d>& points, double scale) {
    if (points.size() < 2)
        throw DegenerateInputError("suggest_alpha: at least 2 points required");
    if (!(scale > 0.0)) throw ArgumentError("suggest_alpha: scale must be positive");

    Eigen::Vector3d lo = points.front(), hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double cell =
        std::max((hi - lo).norm() / std::max(1.0, std::cbrt(double(points.size()))), 1e-12);
    const PointGrid grid(points, cell);
    std::vector<double> nn(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto hits = grid.knn(points[i], 1, int(i));
        nn[i] = hits.empty() ? 0.0 : std::sqrt(hits.front().first);
    }
    std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
    const double median = nn[nn.size() / 2];
    if (!(median > 0.0))
        throw DegenerateInputError(
            "suggest_alpha: median nearest-neighbour distance is zero; pass alpha manually");
    return scale * median;
}

}  // namespace s2t
