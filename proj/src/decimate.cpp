// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/decimate.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>

namespace s2t {

namespace {

struct Candidate {
    double cost;
    int a, b;              // collapse b into a
    int version_a, version_b;
    Eigen::Vector3d target;

    bool operator>(const Candidate& other) const {
        return std::tie(cost, a, b) > std::tie(other.cost, other.a, other.b);
    }
};

Eigen::Matrix4d plane_quadric(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                              const Eigen::Vector3d& p2) {
    const Eigen::Vector3d cross = (p1 - p0).cross(p2 - p0);
    const double area2 = cross.norm();
    if (area2 <= 0.0) return Eigen::Matrix4d::Zero();
    const Eigen::Vector3d n = cross / area2;
    Eigen::Vector4d plane;
    plane << n, -n.dot(p0);
    return 0.5 * area2 * (plane * plane.transpose());  // area-weighted
}

double quadric_cost(const Eigen::Matrix4d& q, const Eigen::Vector3d& v) {
    Eigen::Vector4d h;
    h << v, 1.0;
    return h.dot(q * h);
}

}  // namespace

TriMesh decimate(const TriMesh& mesh, int target_faces) {
    if (target_faces < 4) throw ArgumentError("decimate: target_faces must be at least 4");
    mesh.validate();
    if (int(mesh.face_count()) <= target_faces) return mesh;

    std::vector<Eigen::Vector3d> pos = mesh.vertices;
    std::vector<std::array<int, 3>> faces = mesh.faces;
    std::vector<char> face_alive(faces.size(), 1);
    std::vector<std::vector<int>> incident(pos.size());  // vertex -> face ids
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int v : faces[f]) incident[std::size_t(v)].push_back(int(f));

    std::vector<Eigen::Matrix4d> quadric(pos.size(), Eigen::Matrix4d::Zero());
    for (const auto& [a, b, c] : faces) {
        const Eigen::Matrix4d k =
            plane_quadric(pos[std::size_t(a)], pos[std::size_t(b)], pos[std::size_t(c)]);
        quadric[std::size_t(a)] += k;
        quadric[std::size_t(b)] += k;
        quadric[std::size_t(c)] += k;
    }
    std::vector<int> version(pos.size(), 0);

    const auto optimal_point = [&](int a, int b, double& cost_out) {
        const Eigen::Matrix4d q = quadric[std::size_t(a)] + quadric[std::size_t(b)];
        const Eigen::Matrix3d m = q.topLeftCorner<3, 3>();
        const Eigen::Vector3d rhs = -q.topRightCorner<3, 1>();
        Eigen::Vector3d best;
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
        if (lu.isInvertible()) {
            best = lu.solve(rhs);
            cost_out = quadric_cost(q, best);
            return best;
        }
        // Singular quadric (flat neighbourhood): best of endpoints/midpoint.
        const Eigen::Vector3d mid = 0.5 * (pos[std::size_t(a)] + pos[std::size_t(b)]);
        best = mid;
        cost_out = quadric_cost(q, mid);
        for (const Eigen::Vector3d& candidate : {pos[std::size_t(a)], pos[std::size_t(b)]}) {
            const double c = quadric_cost(q, candidate);
            if (c < cost_out) {
                cost_out = c;
                best = candidate;
            }
        }
        return best;
    };

    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<Candidate>> heap;
    const auto push_edge = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        double cost = 0.0;
        const Eigen::Vector3d target = optimal_point(a, b, cost);
        heap.push({cost, a, b, version[std::size_t(a)], version[std::size_t(b)], target});
    };
    {
        std::set<std::pair<int, int>> seen;
        for (const auto& face : faces)
            for (int k = 0; k < 3; ++k) {
                const int u = face[std::size_t(k)], v = face[std::size_t((k + 1) % 3)];
                if (seen.emplace(std::min(u, v), std::max(u, v)).second)
                    push_edge(u, v);
            }
    }

    std::size_t alive_count = faces.size();
    const auto neighbor_vertices = [&](int v) {
        std::set<int> out;
        for (int f : incident[std::size_t(v)]) {
            if (!face_alive[std::size_t(f)]) continue;
            for (int w : faces[std::size_t(f)])
                if (w != v) out.insert(w);
        }
        return out;
    };

    while (alive_count > std::size_t(target_faces) && !heap.empty()) {
        const Candidate cand = heap.top();
        heap.pop();
        const int a = cand.a, b = cand.b;
        if (cand.version_a != version[std::size_t(a)] ||
            cand.version_b != version[std::size_t(b)])
            continue;  // stale entry

        // Faces sharing the edge, and the link condition: the common
        // neighbourhood of a and b must be exactly the opposite vertices of
        // those shared faces, otherwise the collapse pinches the surface.
        std::vector<int> shared_faces;
        std::set<int> shared_opposite;
        for (int f : incident[std::size_t(a)]) {
            if (!face_alive[std::size_t(f)]) continue;
            const auto& fv = faces[std::size_t(f)];
            if (std::find(fv.begin(), fv.end(), b) == fv.end()) continue;
            shared_faces.push_back(f);
            for (int w : fv)
                if (w != a && w != b) shared_opposite.insert(w);
        }
        if (shared_faces.empty()) continue;  // edge no longer exists
        const std::set<int> na = neighbor_vertices(a);
        const std::set<int> nb = neighbor_vertices(b);
        std::set<int> common;
        std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(),
                              std::inserter(common, common.begin()));
        if (common != shared_opposite) continue;

        // Normal flip / degeneracy check for every surviving face that will
        // move with the merged vertex.
        bool rejected = false;
        const auto flips = [&](int moving, int other) {
            for (int f : incident[std::size_t(moving)]) {
                if (!face_alive[std::size_t(f)]) continue;
                const auto& fv = faces[std::size_t(f)];
                if (std::find(fv.begin(), fv.end(), other) != fv.end()) continue;  // dies
                Eigen::Vector3d p[3], q[3];
                for (int k = 0; k < 3; ++k) {
                    p[k] = pos[std::size_t(fv[std::size_t(k)])];
                    q[k] = (fv[std::size_t(k)] == moving) ? cand.target
                                                          : pos[std::size_t(fv[std::size_t(k)])];
                }
                const Eigen::Vector3d n_old = (p[1] - p[0]).cross(p[2] - p[0]);
                const Eigen::Vector3d n_new = (q[1] - q[0]).cross(q[2] - q[0]);
                if (n_new.norm() <= 0.0 || n_old.dot(n_new) <= 0.0) return true;
            }
            return false;
        };
        if (flips(a, b) || flips(b, a)) rejected = true;
        if (rejected) continue;

        // Commit: b merges into a at the optimal position.
        pos[std::size_t(a)] = cand.target;
        quadric[std::size_t(a)] += quadric[std::size_t(b)];
        for (int f : shared_faces) {
            face_alive[std::size_t(f)] = 0;
            --alive_count;
        }
        for (int f : incident[std::size_t(b)]) {
            if (!face_alive[std::size_t(f)]) continue;
            for (int& v : faces[std::size_t(f)])
                if (v == b) v = a;
            incident[std::size_t(a)].push_back(f);
        }
        incident[std::size_t(b)].clear();
        ++version[std::size_t(a)];
        ++version[std::size_t(b)];
        for (int v : neighbor_vertices(a)) push_edge(a, v);
    }

    if (alive_count > std::size_t(target_faces))
        log::warn("decimate: stopped at " + std::to_string(alive_count) +
                  " faces; no admissible collapse left toward target " +
                  std::to_string(target_faces));

    TriMesh out;
    std::vector<int> vmap(pos.size(), -1);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        if (!face_alive[f]) continue;
        std::array<int, 3> face = faces[f];
        for (int& v : face) {
            if (vmap[std::size_t(v)] < 0) {
                vmap[std::size_t(v)] = int(out.vertices.size());
                out.vertices.push_back(pos[std::size_t(v)]);
            }
            v = vmap[std::size_t(v)];
        }
        out.faces.push_back(face);
    }
    return out;
}

}  // namespace s2t
