// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/delaunay.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/predicates.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <unordered_map>

namespace s2t {

namespace {

constexpr int kInf = -1;

// Facet opposite slot k of a positively oriented cell (v0,v1,v2,v3), ordered
// so the opposite vertex lies on the positive side (inward ordering).
constexpr int kFacet[4][3] = {{2, 1, 3}, {0, 2, 3}, {1, 0, 3}, {0, 1, 2}};

struct Cell {
    std::array<int, 4> v{};  // vertex ids; infinite cells keep kInf in slot 3
    std::array<int, 4> n{};  // neighbor cell across facet opposite slot k
    bool alive = false;
    std::uint32_t stamp = 0;  // conflict-BFS visit marker
};

std::uint64_t morton3(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    auto spread = [](std::uint64_t v) {
        v &= 0x1FFFFF;
        v = (v | (v << 32)) & 0x1F00000000FFFF;
        v = (v | (v << 16)) & 0x1F0000FF0000FF;
        v = (v | (v << 8)) & 0x100F00F00F00F00F;
        v = (v | (v << 4)) & 0x10C30C30C30C30C3;
        v = (v | (v << 2)) & 0x1249249249249249;
        return v;
    };
    return spread(x) | (spread(y) << 1) | (spread(z) << 2);
}

class Builder {
public:
    explicit Builder(const std::vector<Eigen::Vector3d>& input) : input_(input) {
        dedupe();
        if (pts_.size() < 4)
            throw DegenerateInputError(
                "delaunay3d: fewer than 4 distinct points; fall back to convex-hull meshing");
        morton_sort();
        init_first_cell();
        for (std::size_t s = 0; s < order_.size(); ++s) {
            const int w = order_[s];
            if (used_[std::size_t(w)]) continue;
            insert(w);
        }
    }

    Tetrahedralization finish() {
        Tetrahedralization out;
        out.points = input_;
        std::vector<int> compact(cells_.size(), -1);
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            if (!cells_[c].alive || is_infinite(int(c))) continue;
            compact[c] = int(out.tets.size());
            std::array<int, 4> t;
            for (int k = 0; k < 4; ++k) t[std::size_t(k)] = orig_[std::size_t(cells_[c].v[k])];
            out.tets.push_back(t);
        }
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            if (compact[c] < 0) continue;
            std::array<int, 4> nb;
            for (int k = 0; k < 4; ++k) {
                const int n = cells_[c].n[std::size_t(k)];
                nb[std::size_t(k)] = (n >= 0 && compact[std::size_t(n)] >= 0)
                                         ? compact[std::size_t(n)]
                                         : -1;
            }
            out.neighbors.push_back(nb);
        }
        return out;
    }

private:
    const std::vector<Eigen::Vector3d>& input_;
    std::vector<Eigen::Vector3d> pts_;  // deduplicated working points
    std::vector<int> orig_;             // working id -> original input id
    std::vector<int> order_;            // Morton insertion order of working ids
    std::vector<char> used_;
    std::vector<Cell> cells_;
    std::vector<int> free_;
    Eigen::Vector3d ref_ = Eigen::Vector3d::Zero();  // strictly inside the hull
    int hint_ = 0;
    std::uint32_t stamp_ = 0;

    bool is_infinite(int c) const { return cells_[std::size_t(c)].v[3] == kInf; }
    const Eigen::Vector3d& pt(int v) const { return pts_[std::size_t(v)]; }

    void dedupe() {
        struct KeyHash {
            std::size_t operator()(const std::array<double, 3>& k) const {
                std::uint64_t h = 1469598103934665603ull;
                for (double d : k) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &d, 8);
                    h = (h ^ bits) * 1099511628211ull;
                }
                return std::size_t(h);
            }
        };
        std::unordered_map<std::array<double, 3>, int, KeyHash> seen;
        seen.reserve(input_.size());
        for (std::size_t i = 0; i < input_.size(); ++i) {
            const std::array<double, 3> key{input_[i].x(), input_[i].y(), input_[i].z()};
            if (seen.emplace(key, int(i)).second) {
                pts_.push_back(input_[i]);
                orig_.push_back(int(i));
            }
        }
        used_.assign(pts_.size(), 0);
    }

    void morton_sort() {
        Eigen::Vector3d lo = pts_.front(), hi = pts_.front();
        for (const auto& p : pts_) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Eigen::Vector3d span = (hi - lo).cwiseMax(1e-300);
        std::vector<std::pair<std::uint64_t, int>> keys;
        keys.reserve(pts_.size());
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            const Eigen::Vector3d t = (pts_[i] - lo).cwiseQuotient(span);
            auto q = [](double v) {
                return std::uint32_t(std::min(2097151.0, std::max(0.0, v * 2097151.0)));
            };
            keys.emplace_back(morton3(q(t.x()), q(t.y()), q(t.z())), int(i));
        }
        std::sort(keys.begin(), keys.end());
        order_.reserve(keys.size());
        for (const auto& [m, i] : keys) order_.push_back(i);
    }

    int new_cell(const std::array<int, 4>& v) {
        int id;
        if (!free_.empty()) {
            id = free_.back();
            free_.pop_back();
        } else {
            id = int(cells_.size());
            cells_.emplace_back();
        }
        Cell& c = cells_[std::size_t(id)];
        c.v = v;
        c.n = {-1, -1, -1, -1};
        c.alive = true;
        c.stamp = 0;
        return id;
    }

    void kill_cell(int c) {
        cells_[std::size_t(c)].alive = false;
        free_.push_back(c);
    }

    // Picks a spread-out, exactly non-degenerate starting tetrahedron.
    void init_first_cell() {
        const int a = order_[0];
        int b = -1;
        double best = -1.0;
        for (int w : order_) {
            if (w == a) continue;
            const double d = (pt(w) - pt(a)).squaredNorm();
            if (d > best) {
                best = d;
                b = w;
            }
        }
        int c = -1;
        best = -1.0;
        for (int w : order_) {
            if (w == a || w == b) continue;
            const double area = (pt(b) - pt(a)).cross(pt(w) - pt(a)).squaredNorm();
            if (area > best) {
                best = area;
                c = w;
            }
        }
        int d = -1;
        best = 0.0;
        for (int w : order_) {
            if (w == a || w == b || w == c) continue;
            const double vol = std::abs((pt(b) - pt(a))
                                            .cross(pt(c) - pt(a))
                                            .dot(pt(w) - pt(a)));
            if (vol > best) {
                best = vol;
                d = w;
            }
        }
        if (d < 0 || orient3d(pt(a), pt(b), pt(c), pt(d)) == 0) {
            d = -1;
            for (int w : order_) {  // exact rescue scan for any non-coplanar point
                if (w == a || w == b || w == c) continue;
                if (orient3d(pt(a), pt(b), pt(c), pt(w)) != 0) {
                    d = w;
                    break;
                }
            }
            if (d < 0)
                throw DegenerateInputError(
                    "delaunay3d: input points are coplanar; fall back to convex-hull meshing");
        }
        std::array<int, 4> quad{a, b, c, d};
        if (orient3d(pt(quad[0]), pt(quad[1]), pt(quad[2]), pt(quad[3])) < 0)
            std::swap(quad[1], quad[2]);

        const int t0 = new_cell(quad);
        for (int q : quad) used_[std::size_t(q)] = 1;

        // Interior reference point, verified strictly inside with exact
        // predicates; used to orient hull facets of infinite cells.
        const Eigen::Vector3d centroid =
            0.25 * (pt(quad[0]) + pt(quad[1]) + pt(quad[2]) + pt(quad[3]));
        bool ok = strictly_inside(t0, centroid);
        if (ok) {
            ref_ = centroid;
        } else {
            for (int k = 0; k < 4 && !ok; ++k) {
                const Eigen::Vector3d mix = 0.75 * centroid + 0.25 * pt(quad[std::size_t(k)]);
                if (strictly_inside(t0, mix)) {
                    ref_ = mix;
                    ok = true;
                }
            }
        }
        if (!ok)
            throw DegenerateInputError(
                "delaunay3d: starting tetrahedron too flat at double precision");

        // One infinite cell per facet of t0, hull triple ordered outward.
        std::array<int, 4> inf_ids;
        std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edge_map;
        for (int k = 0; k < 4; ++k) {
            const Cell& t = cells_[std::size_t(t0)];
            const int f0 = t.v[std::size_t(kFacet[k][0])];
            const int f1 = t.v[std::size_t(kFacet[k][1])];
            const int f2 = t.v[std::size_t(kFacet[k][2])];
            // Inward triple faces the opposite vertex; reverse it for the
            // outward hull orientation.
            const int ic = new_cell({f0, f2, f1, kInf});
            inf_ids[std::size_t(k)] = ic;
            cells_[std::size_t(ic)].n[3] = t0;
            cells_[std::size_t(t0)].n[std::size_t(k)] = ic;
        }
        for (int k = 0; k < 4; ++k) {
            const int ic = inf_ids[std::size_t(k)];
            for (int s = 0; s < 3; ++s) {  // facets containing kInf
                const Cell& cc = cells_[std::size_t(ic)];
                int e0 = -2, e1 = -2;
                int out = 0;
                for (int j = 0; j < 3; ++j) {
                    const int vv = cc.v[std::size_t(kFacet[s][j])];
                    if (vv == kInf) continue;
                    (out++ == 0 ? e0 : e1) = vv;
                }
                const auto key = std::minmax(e0, e1);
                auto& lst = edge_map[key];
                lst.emplace_back(ic, s);
            }
        }
        for (const auto& [key, lst] : edge_map) {
            // Every hull edge of the initial tet is shared by two facets.
            cells_[std::size_t(lst[0].first)].n[std::size_t(lst[0].second)] = lst[1].first;
            cells_[std::size_t(lst[1].first)].n[std::size_t(lst[1].second)] = lst[0].first;
        }
        hint_ = t0;
    }

    bool strictly_inside(int cell, const Eigen::Vector3d& q) const {
        const Cell& c = cells_[std::size_t(cell)];
        for (int k = 0; k < 4; ++k) {
            if (orient3d(pt(c.v[std::size_t(kFacet[k][0])]), pt(c.v[std::size_t(kFacet[k][1])]),
                         pt(c.v[std::size_t(kFacet[k][2])]), q) <= 0)
                return false;
        }
        return true;
    }

    bool in_conflict(int cell, const Eigen::Vector3d& p) const {
        const Cell& c = cells_[std::size_t(cell)];
        if (c.v[3] != kInf)
            return insphere(pt(c.v[0]), pt(c.v[1]), pt(c.v[2]), pt(c.v[3]), p) > 0;
        const int o = orient3d(pt(c.v[0]), pt(c.v[1]), pt(c.v[2]), p);
        if (o > 0) return true;
        if (o < 0) return false;
        return incircle_coplanar(pt(c.v[0]), pt(c.v[1]), pt(c.v[2]), p) > 0;
    }

    // Visibility walk among finite cells; returns a cell in conflict with p
    // (the containing cell, or the infinite cell crossed when p is outside
    // the hull).
    int locate(const Eigen::Vector3d& p) const {
        int cell = hint_;
        if (!cells_[std::size_t(cell)].alive || is_infinite(cell)) cell = -1;
        if (cell < 0) {
            for (std::size_t i = 0; i < cells_.size(); ++i)
                if (cells_[i].alive && !is_infinite(int(i))) {
                    cell = int(i);
                    break;
                }
        }
        std::size_t alive_bound = cells_.size() * 4 + 16;
        for (std::size_t step = 0; step < alive_bound; ++step) {
            const Cell& c = cells_[std::size_t(cell)];
            int next = -1;
            for (int k = 0; k < 4; ++k) {
                const int o = orient3d(pt(c.v[std::size_t(kFacet[k][0])]),
                                       pt(c.v[std::size_t(kFacet[k][1])]),
                                       pt(c.v[std::size_t(kFacet[k][2])]), p);
                if (o < 0) {
                    next = c.n[std::size_t(k)];
                    break;
                }
            }
            if (next < 0) return cell;          // inside (or on boundary of) this cell
            if (is_infinite(next)) return next;  // crossed a hull facet: outside
            cell = next;
        }
        // Degenerate walk cycle; deterministic exhaustive rescue.
        for (std::size_t i = 0; i < cells_.size(); ++i)
            if (cells_[i].alive && in_conflict(int(i), p)) return int(i);
        throw ValidationError("delaunay3d: point location failed (duplicate input?)");
    }

    void insert(int w) {
        const Eigen::Vector3d& p = pt(w);
        int seed = locate(p);
        if (!in_conflict(seed, p)) {
            bool found = false;
            for (int k = 0; k < 4 && !found; ++k) {
                const int n = cells_[std::size_t(seed)].n[std::size_t(k)];
                if (n >= 0 && in_conflict(n, p)) {
                    seed = n;
                    found = true;
                }
            }
            if (!found) {
                for (std::size_t i = 0; i < cells_.size() && !found; ++i)
                    if (cells_[i].alive && in_conflict(int(i), p)) {
                        seed = int(i);
                        found = true;
                    }
            }
            if (!found)
                throw ValidationError("delaunay3d: no conflict cell for inserted point");
        }

        // Conflict region BFS; boundary facets recorded as (cavity cell,
        // slot, outside cell).
        ++stamp_;
        std::vector<int> cavity;
        std::deque<int> queue{seed};
        cells_[std::size_t(seed)].stamp = stamp_;
        struct Boundary {
            int cavity_cell;
            int slot;
            int outside;
        };
        std::vector<Boundary> boundary;
        while (!queue.empty()) {
            const int c = queue.front();
            queue.pop_front();
            cavity.push_back(c);
            for (int k = 0; k < 4; ++k) {
                const int n = cells_[std::size_t(c)].n[std::size_t(k)];
                if (cells_[std::size_t(n)].stamp == stamp_) continue;
                if (in_conflict(n, p)) {
                    cells_[std::size_t(n)].stamp = stamp_;
                    queue.push_back(n);
                } else {
                    boundary.push_back({c, k, n});
                }
            }
        }

        // Retriangulate the cavity as the star of p over its boundary.
        std::map<std::pair<int, int>, std::pair<int, int>> pending;  // facet-minus-p -> (cell, slot)
        int last_finite = -1;
        for (const auto& bf : boundary) {
            const Cell& cc = cells_[std::size_t(bf.cavity_cell)];
            int fv[3];
            for (int j = 0; j < 3; ++j) fv[j] = cc.v[std::size_t(kFacet[bf.slot][j])];

            int fresh;
            std::array<std::pair<int, int>, 3> keys_and_slots;  // (edge key entries)
            if (fv[0] != kInf && fv[1] != kInf && fv[2] != kInf) {
                // Finite boundary facet. For a finite cavity cell the inward
                // triple faces p directly; for an infinite cavity cell the
                // stored hull triple is outward-ordered and p conflicts from
                // strictly outside, so it faces p as well.
                const int f0 = fv[0], f1 = fv[1], f2 = fv[2];
                if (orient3d(pt(f0), pt(f1), pt(f2), p) <= 0)
                    throw ValidationError("delaunay3d: degenerate cavity facet");
                fresh = new_cell({f0, f1, f2, w});
                glue(fresh, 3, bf.outside, bf.cavity_cell);
                add_pending(pending, fresh, 0, std::minmax(f1, f2));
                add_pending(pending, fresh, 1, std::minmax(f0, f2));
                add_pending(pending, fresh, 2, std::minmax(f0, f1));
                last_finite = fresh;
            } else {
                // Hull-edge facet {x, y, kInf}: the new cell is infinite with
                // hull facet (x', y', p) ordered outward via the interior
                // reference point.
                int x = -2, y = -2;
                int seen = 0;
                for (int j = 0; j < 3; ++j) {
                    if (fv[j] == kInf) continue;
                    (seen++ == 0 ? x : y) = fv[j];
                }
                const int o = orient3d(pt(x), pt(y), p, ref_);
                if (o == 0)
                    throw DegenerateInputError(
                        "delaunay3d: collinear hull extension; perturb the input");
                if (o > 0) std::swap(x, y);
                fresh = new_cell({x, y, w, kInf});
                glue(fresh, 2, bf.outside, bf.cavity_cell);
                add_pending(pending, fresh, 3, std::minmax(x, y));
                add_pending(pending, fresh, 0, std::minmax(y, kInf));
                add_pending(pending, fresh, 1, std::minmax(x, kInf));
            }
        }
        if (!pending.empty())
            throw ValidationError("delaunay3d: cavity boundary is not closed");
        for (int c : cavity) kill_cell(c);
        used_[std::size_t(w)] = 1;
        if (last_finite >= 0) hint_ = last_finite;
    }

    void add_pending(std::map<std::pair<int, int>, std::pair<int, int>>& pending, int cell,
                     int slot, std::pair<int, int> key) {
        const auto it = pending.find(key);
        if (it == pending.end()) {
            pending.emplace(key, std::make_pair(cell, slot));
        } else {
            cells_[std::size_t(cell)].n[std::size_t(slot)] = it->second.first;
            cells_[std::size_t(it->second.first)].n[std::size_t(it->second.second)] = cell;
            pending.erase(it);
        }
    }

    // Glues fresh cell (at fresh_slot) to the outside cell across the facet
    // the outside cell used to share with the cavity cell.
    void glue(int fresh, int fresh_slot, int outside, int cavity_cell) {
        cells_[std::size_t(fresh)].n[std::size_t(fresh_slot)] = outside;
        Cell& oc = cells_[std::size_t(outside)];
        for (int k = 0; k < 4; ++k) {
            if (oc.n[std::size_t(k)] == cavity_cell) {
                oc.n[std::size_t(k)] = fresh;
                return;
            }
        }
        throw ValidationError("delaunay3d: adjacency bookkeeping broke");
    }
};

}  // namespace

std::pair<Eigen::Vector3d, double> Tetrahedralization::circumsphere(std::size_t cell) const {
    const auto& t = tets[cell];
    const Eigen::Vector3d a = points[std::size_t(t[0])];
    Eigen::Matrix3d m;
    Eigen::Vector3d rhs;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d d = points[std::size_t(t[std::size_t(k) + 1])] - a;
        m.row(k) = 2.0 * d;
        rhs[k] = d.squaredNorm();
    }
    const Eigen::Vector3d local = m.fullPivLu().solve(rhs);
    return {a + local, local.norm()};
}

Tetrahedralization delaunay3d(const std::vector<Eigen::Vector3d>& points) {
    Builder builder(points);
    return builder.finish();
}

}  // namespace s2t
