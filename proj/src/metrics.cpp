// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/metrics.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/neighbors.hpp"
#include "splat2twin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace s2t {

ConsistencyResult consistency_score(const SplatCloud& cloud,
                                    const std::vector<CameraView>& views,
                                    const std::vector<const Image8*>& label_masks,
                                    const std::vector<DepthMap>& depth_maps, double tau_depth,
                                    double high_conf) {
    if (!(high_conf > 0.0 && high_conf <= 1.0))
        throw ArgumentError("consistency_score: high_conf must lie in (0,1]");
    if (views.size() != label_masks.size() || views.size() != depth_maps.size())
        throw ArgumentError("consistency_score: views, masks and depth maps must align");

    ConsistencyResult res;
    res.per_point.assign(cloud.size(), -1.0);
    res.visible_views.assign(cloud.size(), 0);
    res.foreground_views.assign(cloud.size(), 0);

    parallel_for(cloud.size(), [&](std::size_t i) {
        const Eigen::Vector3d p = cloud[i].centre();
        int n_p = 0, n_fg = 0;
        for (std::size_t j = 0; j < views.size(); ++j) {
            const auto hit = project(views[j], p);
            if (!hit) continue;
            const int px = int(std::floor(hit->u));
            const int py = int(std::floor(hit->v));
            if (depth_maps[j].is_empty(px, py)) continue;
            if (std::abs(hit->depth - double(depth_maps[j].at(px, py))) > tau_depth) continue;
            ++n_p;
            if (label_masks[j] && label_masks[j]->foreground(px, py)) ++n_fg;
        }
        res.visible_views[i] = n_p;
        res.foreground_views[i] = n_fg;
        if (n_p > 0) res.per_point[i] = double(n_fg) / double(n_p);
    });

    std::size_t consistent = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (res.visible_views[i] == 0) continue;
        ++res.valid_point_count;
        if (res.per_point[i] >= high_conf) ++consistent;
    }
    res.consistent_fraction =
        res.valid_point_count == 0 ? 0.0 : 100.0 * double(consistent) / double(res.valid_point_count);
    return res;
}

double ghost_index(const SplatCloud& cloud, const std::vector<CameraView>& views,
                   const MaskSet& masks, const VoteConfig& cfg, double divisor_eval,
                   double divisor_ref) {
    if (!(divisor_eval >= 1.0) || !(divisor_ref >= 1.0))
        throw ArgumentError("ghost_index: divisors must be >= 1");
    if (cloud.empty()) return 0.0;

    std::vector<DepthMap> maps(views.size());
    parallel_for(views.size(), [&](std::size_t j) {
        maps[j] = render_depth(views[j], cloud, cfg.render_alpha_min);
    });
    const auto count_fg = [&](double divisor) {
        VoteConfig c = cfg;
        c.threshold_divisor = divisor;
        const LabelField field = vote(cloud, views, masks, c, maps);
        std::size_t fg = 0;
        for (const auto& e : field.entries) fg += e.label != 0;
        return fg;
    };
    const std::size_t fg_eval = count_fg(divisor_eval);
    const std::size_t fg_ref = count_fg(divisor_ref);
    if (fg_eval <= fg_ref) return 0.0;
    return 100.0 * double(fg_eval - fg_ref) / double(cloud.size());
}

std::vector<Eigen::Vector3d> voxel_downsample(const std::vector<Eigen::Vector3d>& points,
                                              double resolution) {
    if (!(resolution > 0.0)) return points;
    struct Acc {
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        std::size_t count = 0;
        std::size_t order = 0;
    };
    std::unordered_map<std::uint64_t, Acc> voxels;
    voxels.reserve(points.size());
    const auto key_of = [&](const Eigen::Vector3d& p) {
        const std::uint64_t bias = 1u << 20;
        const auto q = [&](double v) {
            return (std::uint64_t(std::int64_t(std::floor(v / resolution))) + bias) & 0x1FFFFF;
        };
        return q(p.x()) | (q(p.y()) << 21) | (q(p.z()) << 42);
    };
    std::size_t next_order = 0;
    for (const auto& p : points) {
        Acc& acc = voxels[key_of(p)];
        if (acc.count == 0) acc.order = next_order++;
        acc.sum += p;
        ++acc.count;
    }
    std::vector<Eigen::Vector3d> out(voxels.size());
    for (const auto& [key, acc] : voxels) out[acc.order] = acc.sum / double(acc.count);
    return out;
}

namespace {

double mean_nn_distance(const std::vector<Eigen::Vector3d>& from,
                        const std::vector<Eigen::Vector3d>& to) {
    Eigen::Vector3d lo = to.front(), hi = to.front();
    for (const auto& p : to) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double cell =
        std::max((hi - lo).norm() / std::max(1.0, std::cbrt(double(to.size()))), 1e-12);
    const PointGrid grid(to, cell);
    std::vector<double> dist(from.size());
    parallel_for(from.size(), [&](std::size_t i) {
        const auto hits = grid.knn(from[i], 1);
        dist[i] = std::sqrt(hits.front().first);
    });
    double sum = 0.0;
    for (double d : dist) sum += d;
    return sum / double(from.size());
}

std::size_t count_within(const std::vector<Eigen::Vector3d>& from,
                         const std::vector<Eigen::Vector3d>& to, double threshold) {
    Eigen::Vector3d lo = to.front(), hi = to.front();
    for (const auto& p : to) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double cell =
        std::max((hi - lo).norm() / std::max(1.0, std::cbrt(double(to.size()))), 1e-12);
    const PointGrid grid(to, cell);
    std::vector<char> hit(from.size(), 0);
    parallel_for(from.size(), [&](std::size_t i) {
        const auto hits = grid.knn(from[i], 1);
        hit[i] = std::sqrt(hits.front().first) <= threshold;
    });
    return std::size_t(std::count(hit.begin(), hit.end(), char(1)));
}

}  // namespace

double chamfer(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b,
               double resolution) {
    if (a.empty() || b.empty()) throw ArgumentError("chamfer: point sets must be non-empty");
    const auto da = voxel_downsample(a, resolution);
    const auto db = voxel_downsample(b, resolution);
    return 0.5 * (mean_nn_distance(da, db) + mean_nn_distance(db, da));
}

GeomFidelity precision_recall_f1(const std::vector<Eigen::Vector3d>& pred,
                                 const std::vector<Eigen::Vector3d>& gt, double match_threshold) {
    if (pred.empty() || gt.empty())
        throw ArgumentError("precision_recall_f1: point sets must be non-empty");
    if (!(match_threshold > 0.0))
        throw ArgumentError("precision_recall_f1: match_threshold must be positive");
    GeomFidelity out;
    out.match_threshold = match_threshold;
    out.precision = double(count_within(pred, gt, match_threshold)) / double(pred.size());
    out.recall = double(count_within(gt, pred, match_threshold)) / double(gt.size());
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

double miou_2d(const std::vector<std::pair<const Image8*, const Image8*>>& pred_gt_pairs) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& [pred, gt] : pred_gt_pairs) {
        if (!pred || !gt) throw ArgumentError("miou_2d: null mask");
        if (pred->width != gt->width || pred->height != gt->height)
            throw ArgumentError("miou_2d: mask dimension mismatch");
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred->pixels.size(); ++i) {
            const bool p = pred->pixels[i] != 0;
            const bool g = gt->pixels[i] != 0;
            inter += p && g;
            uni += p || g;
        }
        if (uni == 0) continue;  // both empty: excluded from the mean
        sum += double(inter) / double(uni);
        ++counted;
    }
    if (counted == 0) throw ArgumentError("miou_2d: no mask pair with a non-empty union");
    return sum / double(counted);
}

}  // namespace s2t
