// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/labeling.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/neighbors.hpp"
#include "splat2twin/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

namespace s2t {

using nlohmann::json;

void VoteConfig::validate() const {
    if (!(threshold_divisor >= 1.0))
        throw ArgumentError("VoteConfig.threshold_divisor must be >= 1");
    if (!(tau_depth > 0.0)) throw ArgumentError("VoteConfig.tau_depth must be positive");
    if (!(gate_eps > 0.0)) throw ArgumentError("VoteConfig.gate_eps must be positive");
    if (gate_min_samples < 1) throw ArgumentError("VoteConfig.gate_min_samples must be positive");
    if (max_iter < 1) throw ArgumentError("VoteConfig.max_iter must be positive");
    if (knn_k < 1) throw ArgumentError("VoteConfig.knn_k must be positive");
    if (!(knn_flip_fraction > 0.5 && knn_flip_fraction <= 1.0))
        throw ArgumentError("VoteConfig.knn_flip_fraction must lie in (0.5, 1]");
    if (!(render_alpha_min >= 0.0 && render_alpha_min <= 1.0))
        throw ArgumentError("VoteConfig.render_alpha_min must lie in [0,1]");
}

std::size_t LabelField::count_with_label(int label) const {
    return std::size_t(std::count_if(entries.begin(), entries.end(),
                                     [&](const SplatVote& e) { return e.label == label; }));
}

namespace {

// Gate computation shared by the public entry point and vote(), which
// caches one projection pass per view.
GateResult gate_from_projections(const std::vector<std::optional<PixelHit>>& proj,
                                 const Image8& mask, const VoteConfig& cfg) {
    GateResult res;
    res.weight.assign(proj.size(), 0);
    std::vector<int> in_mask_idx;
    std::vector<double> depths;
    for (std::size_t i = 0; i < proj.size(); ++i) {
        if (!proj[i]) continue;
        const int px = int(std::floor(proj[i]->u));
        const int py = int(std::floor(proj[i]->v));
        if (!mask.foreground(px, py)) continue;
        in_mask_idx.push_back(int(i));
        depths.push_back(proj[i]->depth);
    }
    res.in_mask_count = int(in_mask_idx.size());
    if (res.in_mask_count < cfg.gate_min_samples) {
        res.degenerate = true;
        return res;
    }

    const std::vector<int> clusters = dbscan_1d(depths, cfg.gate_eps, cfg.gate_min_samples);
    int cluster_count = 0;
    for (int c : clusters) cluster_count = std::max(cluster_count, c + 1);
    if (cluster_count == 0) {  // everything classified noise
        res.degenerate = true;
        return res;
    }
    std::vector<int> size(std::size_t(cluster_count), 0);
    std::vector<double> depth_sum(std::size_t(cluster_count), 0.0);
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        if (clusters[k] < 0) continue;
        ++size[std::size_t(clusters[k])];
        depth_sum[std::size_t(clusters[k])] += depths[k];
    }
    int winner = 0;
    for (int c = 1; c < cluster_count; ++c) {
        if (size[c] > size[winner]) {
            winner = c;
        } else if (size[c] == size[winner]) {
            // Count tie: the nearer surface is the likelier mask target.
            if (depth_sum[c] / size[c] < depth_sum[winner] / size[winner]) winner = c;
        }
    }
    for (std::size_t k = 0; k < clusters.size(); ++k)
        if (clusters[k] == winner) res.weight[std::size_t(in_mask_idx[k])] = 1;
    return res;
}

std::vector<std::optional<PixelHit>> project_all(const CameraView& view, const SplatCloud& cloud) {
    std::vector<std::optional<PixelHit>> proj(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) proj[i] = project(view, cloud[i].centre());
    return proj;
}

double grid_cell_for(const std::vector<Eigen::Vector3d>& points) {
    Eigen::Vector3d lo = points.front(), hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diag = (hi - lo).norm();
    const double cell = diag / std::max(1.0, std::cbrt(double(points.size())));
    return std::max(cell, 1e-9);
}

}  // namespace

GateResult depth_cluster_gate(const CameraView& view, const SplatCloud& cloud, const Image8& mask,
                              const VoteConfig& cfg) {
    cfg.validate();
    if (mask.width != view.width || mask.height != view.height)
        throw ArgumentError("depth_cluster_gate: mask dimensions do not match the view");
    return gate_from_projections(project_all(view, cloud), mask, cfg);
}

LabelField vote(const SplatCloud& cloud, const std::vector<CameraView>& views,
                const MaskSet& masks, const VoteConfig& cfg,
                const std::vector<DepthMap>& depth_maps, int* degenerate_gates) {
    cfg.validate();
    if (views.size() != depth_maps.size())
        throw ArgumentError("vote: one depth map per view is required");
    const int n_labels = int(masks.labels.size());
    const std::size_t n = cloud.size();

    struct ViewData {
        std::vector<std::uint8_t> visible;
        std::vector<std::vector<std::uint8_t>> in_mask;  // per object label
        std::vector<GateResult> gate;                    // per object label
    };
    std::vector<ViewData> per_view(views.size());

    parallel_for(views.size(), [&](std::size_t j) {
        const CameraView& view = views[j];
        const auto proj = project_all(view, cloud);
        ViewData& vd = per_view[j];
        vd.visible.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!proj[i]) continue;
            const int px = int(std::floor(proj[i]->u));
            const int py = int(std::floor(proj[i]->v));
            if (depth_maps[j].is_empty(px, py)) continue;
            if (std::abs(proj[i]->depth - double(depth_maps[j].at(px, py))) <= cfg.tau_depth)
                vd.visible[i] = 1;
        }
        vd.in_mask.resize(std::size_t(n_labels));
        vd.gate.resize(std::size_t(n_labels));
        for (int l = 1; l < n_labels; ++l) {
            const Image8* mask = masks.mask(view.view_id, l);
            auto& flags = vd.in_mask[std::size_t(l)];
            flags.assign(n, 0);
            if (!mask) {  // label absent from this view: contributes nothing
                vd.gate[std::size_t(l)].weight.assign(n, 0);
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (!proj[i]) continue;
                const int px = int(std::floor(proj[i]->u));
                const int py = int(std::floor(proj[i]->v));
                if (mask->foreground(px, py)) flags[i] = 1;
            }
            vd.gate[std::size_t(l)] = gate_from_projections(proj, *mask, cfg);
        }
    });

    if (degenerate_gates) {
        for (const auto& vd : per_view)
            for (const auto& g : vd.gate)
                if (g.degenerate) ++*degenerate_gates;
    }

    LabelField field;
    field.labels = masks.labels;
    field.entries.resize(n);
    std::vector<double> score(std::size_t(n_labels), 0.0);
    std::vector<int> fg(std::size_t(n_labels), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(score.begin(), score.end(), 0.0);
        std::fill(fg.begin(), fg.end(), 0);
        int visible = 0;
        for (std::size_t j = 0; j < views.size(); ++j) {  // fixed view order
            const ViewData& vd = per_view[j];
            if (!vd.visible[i]) continue;
            ++visible;
            for (int l = 1; l < n_labels; ++l) {
                if (!vd.in_mask[std::size_t(l)][i]) continue;
                ++fg[std::size_t(l)];
                score[std::size_t(l)] += double(vd.gate[std::size_t(l)].weight[i]);
            }
        }
        SplatVote& entry = field.entries[i];
        entry.visible_views = visible;
        if (visible == 0) continue;  // recorded, never guessed
        int best = 1;
        for (int l = 2; l < n_labels; ++l)
            if (score[std::size_t(l)] > score[std::size_t(best)]) best = l;
        entry.weighted_votes = score[std::size_t(best)];
        entry.foreground_views = fg[std::size_t(best)];
        const double tau = double(visible) / cfg.threshold_divisor;
        entry.label = (entry.weighted_votes >= tau) ? best : 0;
    }
    return field;
}

LabelField knn_boundary_refine(const SplatCloud& cloud, const LabelField& field,
                               const VoteConfig& cfg) {
    cfg.validate();
    if (field.size() != cloud.size())
        throw ArgumentError("knn_boundary_refine: field does not cover the cloud");
    LabelField out = field;
    if (cloud.size() < 2) return out;

    const auto points = cloud.positions();
    const PointGrid grid(points, grid_cell_for(points));
    const int n_labels = int(field.labels.size());

    parallel_for(cloud.size(), [&](std::size_t i) {
        const auto hits = grid.knn(points[i], cfg.knn_k, int(i));
        if (hits.empty()) return;
        std::vector<int> count(std::size_t(n_labels), 0);
        for (const auto& [d2, idx] : hits) ++count[std::size_t(field.entries[idx].label)];
        int majority = 0;
        for (int l = 1; l < n_labels; ++l)
            if (count[std::size_t(l)] > count[std::size_t(majority)]) majority = l;
        const int current = field.entries[i].label;
        if (majority == current) return;
        if (double(count[std::size_t(majority)]) >= cfg.knn_flip_fraction * double(hits.size()))
            out.entries[i].label = majority;
    });
    return out;
}

LiftResult iterative_lift(const SplatCloud& cloud, const std::vector<CameraView>& views,
                          const MaskSet& masks, const VoteConfig& cfg) {
    cfg.validate();
    LiftResult result;
    result.field.labels = masks.labels;
    result.field.entries.assign(cloud.size(), SplatVote{});

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        std::vector<DepthMap> maps(views.size());
        if (iter == 0) {
            parallel_for(views.size(), [&](std::size_t j) {
                maps[j] = render_depth(views[j], cloud, cfg.render_alpha_min);
            });
        } else {
            // Separate per-partition renders merged by pixelwise minimum:
            // the occluder set stays the union of all current partitions.
            const Partitions parts = split_partitions(cloud, result.field);
            parallel_for(views.size(), [&](std::size_t j) {
                DepthMap merged(views[j].width, views[j].height);
                for (const auto& part : parts.clouds) {
                    if (part.empty()) continue;
                    merged = merge_min(merged, render_depth(views[j], part, cfg.render_alpha_min));
                }
                maps[j] = std::move(merged);
            });
        }

        const LabelField voted = vote(cloud, views, masks, cfg, maps, &result.degenerate_gates);
        LabelField refined = knn_boundary_refine(cloud, voted, cfg);

        int changes = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i)
            if (refined.entries[i].label != result.field.entries[i].label) ++changes;
        result.field = std::move(refined);
        result.changes_per_iteration.push_back(changes);
        ++result.iterations_run;
        if (changes == 0) break;
    }
    result.changes_per_iteration.resize(std::size_t(cfg.max_iter), 0);
    return result;
}

Partitions split_partitions(const SplatCloud& cloud, const LabelField& field) {
    if (field.size() != cloud.size())
        throw ArgumentError("split_partitions: field does not cover the cloud");
    Partitions parts;
    parts.labels = field.labels;
    parts.clouds.resize(field.labels.size());
    parts.index.resize(field.labels.size());
    for (auto& c : parts.clouds) c.source_path = cloud.source_path;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const int l = field.entries[i].label;
        parts.clouds[std::size_t(l)].splats.push_back(cloud.splats[i]);
        parts.index[std::size_t(l)].push_back(int(i));
    }
    return parts;
}

void save_label_field(const LabelField& field, const std::string& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["labels"] = field.labels;
    json label_idx = json::array(), votes = json::array(), visible = json::array(),
         fg = json::array();
    for (const auto& e : field.entries) {
        label_idx.push_back(e.label);
        votes.push_back(e.weighted_votes);
        visible.push_back(e.visible_views);
        fg.push_back(e.foreground_views);
    }
    doc["label_index"] = std::move(label_idx);
    doc["weighted_votes"] = std::move(votes);
    doc["visible_views"] = std::move(visible);
    doc["foreground_views"] = std::move(fg);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << doc.dump() << "\n";
}

LabelField load_label_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": invalid JSON (" + e.what() + ")");
    }
    LabelField field;
    try {
        field.labels = doc.at("labels").get<std::vector<std::string>>();
        const auto& li = doc.at("label_index");
        const auto& wv = doc.at("weighted_votes");
        const auto& vv = doc.at("visible_views");
        const auto& fv = doc.at("foreground_views");
        field.entries.resize(li.size());
        for (std::size_t i = 0; i < li.size(); ++i) {
            field.entries[i].label = li[i].get<int>();
            field.entries[i].weighted_votes = wv.at(i).get<double>();
            field.entries[i].visible_views = vv.at(i).get<int>();
            field.entries[i].foreground_views = fv.at(i).get<int>();
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": malformed label field (" + e.what() + ")");
    }
    return field;
}

}  // namespace s2t
