// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/clean.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"
#include "splat2twin/neighbors.hpp"
#include "splat2twin/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace s2t {

using nlohmann::json;

StageMask StageMask::parse(const std::string& name) {
    if (name == "none" || name == "original") return none();
    if (name == "denoise" || name == "denoise_only") return denoise_only();
    if (name == "cluster" || name == "cluster_only") return cluster_only();
    if (name == "full") return full();
    throw ArgumentError("unknown stage mask '" + name +
                        "' (expected none|denoise|cluster|full)");
}

std::string StageMask::name() const {
    if (!opacity && !needle && !sor && !connectivity) return "none";
    if (opacity && needle && sor && connectivity) return "full";
    if (!opacity && !needle && !sor && connectivity) return "cluster_only";
    if (opacity && needle && sor && !connectivity) return "denoise_only";
    std::string s;
    if (opacity) s += "opacity+";
    if (needle) s += "needle+";
    if (sor) s += "sor+";
    if (connectivity) s += "connectivity+";
    s.pop_back();
    return s;
}

namespace {

SplatCloud keep_where(const SplatCloud& cloud, const std::vector<char>& keep) {
    SplatCloud out;
    out.source_path = cloud.source_path;
    out.splats.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (keep[i]) out.splats.push_back(cloud.splats[i]);
    return out;
}

}  // namespace

std::pair<SplatCloud, std::size_t> opacity_filter(const SplatCloud& cloud, double alpha_min) {
    if (!(alpha_min >= 0.0 && alpha_min <= 1.0))
        throw ArgumentError("opacity_filter: alpha_min must lie in [0,1]");
    std::vector<char> keep(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        keep[i] = cloud[i].opacity() >= alpha_min;
    SplatCloud out = keep_where(cloud, keep);
    const std::size_t removed = cloud.size() - out.size();
    return {std::move(out), removed};
}

std::pair<SplatCloud, std::size_t> needle_filter(const SplatCloud& cloud, double ratio_max) {
    if (!(ratio_max > 1.0)) throw ArgumentError("needle_filter: ratio_max must exceed 1");
    std::vector<char> keep(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        keep[i] = anisotropy_ratio(cloud[i]) <= ratio_max;
    SplatCloud out = keep_where(cloud, keep);
    const std::size_t removed = cloud.size() - out.size();
    return {std::move(out), removed};
}

std::pair<SplatCloud, std::size_t> sor_filter(const SplatCloud& cloud, int k, double std_ratio) {
    if (k < 1) throw ArgumentError("sor_filter: k must be positive");
    if (!(std_ratio > 0.0)) throw ArgumentError("sor_filter: std_ratio must be positive");
    if (cloud.size() <= std::size_t(k)) {
        log::warn("sor_filter: cloud of " + std::to_string(cloud.size()) +
                  " splats is not larger than k=" + std::to_string(k) + "; skipping");
        return {cloud, 0};
    }

    const auto points = cloud.positions();
    Eigen::Vector3d lo = points.front(), hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double cell =
        std::max((hi - lo).norm() / std::max(1.0, std::cbrt(double(points.size()))), 1e-9);
    const PointGrid grid(points, cell);

    std::vector<double> mean_dist(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const auto hits = grid.knn(points[i], k, int(i));
        double sum = 0.0;
        for (const auto& [d2, idx] : hits) sum += std::sqrt(d2);
        mean_dist[i] = hits.empty() ? 0.0 : sum / double(hits.size());
    });

    double mean = 0.0;
    for (double d : mean_dist) mean += d;
    mean /= double(mean_dist.size());
    double var = 0.0;
    for (double d : mean_dist) var += (d - mean) * (d - mean);
    var /= double(mean_dist.size());
    const double threshold = mean + std_ratio * std::sqrt(var);

    std::vector<char> keep(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) keep[i] = mean_dist[i] <= threshold;
    SplatCloud out = keep_where(cloud, keep);
    const std::size_t removed = cloud.size() - out.size();
    return {std::move(out), removed};
}

std::pair<SplatCloud, CleanReport> connectivity_prune(const SplatCloud& cloud, double eps,
                                                      int min_samples) {
    if (!(eps > 0.0)) throw ArgumentError("connectivity_prune: eps must be positive");
    if (min_samples < 1) throw ArgumentError("connectivity_prune: min_samples must be positive");
    CleanReport report;
    report.input_count = cloud.size();
    if (cloud.empty()) return {cloud, report};

    const std::vector<int> labels = dbscan(cloud.positions(), eps, min_samples);
    int cluster_count = 0;
    for (int l : labels) cluster_count = std::max(cluster_count, l + 1);
    report.clusters_found = std::size_t(cluster_count);
    if (cluster_count == 0) {
        report.all_noise = true;
        report.removed_by_connectivity = cloud.size();
        log::warn("connectivity_prune: every splat classified noise; eps=" + std::to_string(eps) +
                  " is likely mis-scaled for this cloud");
        return {SplatCloud{{}, cloud.source_path}, report};
    }

    std::vector<std::size_t> size(std::size_t(cluster_count), 0);
    for (int l : labels)
        if (l >= 0) ++size[std::size_t(l)];
    // Cluster ids ascend with smallest member index, so on a size tie the
    // lower id is the cluster containing the smallest original index.
    int winner = 0;
    for (int c = 1; c < cluster_count; ++c)
        if (size[std::size_t(c)] > size[std::size_t(winner)]) winner = c;
    report.largest_cluster_size = size[std::size_t(winner)];

    std::vector<char> keep(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) keep[i] = labels[i] == winner;
    SplatCloud out = keep_where(cloud, keep);
    report.removed_by_connectivity = cloud.size() - out.size();
    return {std::move(out), report};
}

std::pair<SplatCloud, CleanReport> clean_pipeline(const SplatCloud& cloud, const CleanConfig& cfg,
                                                  const StageMask& stages,
                                                  const AttributePredicate& extra_keep) {
    cfg.validate();
    CleanReport report;
    report.input_count = cloud.size();
    SplatCloud current = cloud;

    if (stages.opacity) {
        auto [filtered, removed] = opacity_filter(current, cfg.alpha_min);
        current = std::move(filtered);
        report.removed_by_opacity = removed;
        if (extra_keep) {
            std::vector<char> keep(current.size());
            for (std::size_t i = 0; i < current.size(); ++i) keep[i] = extra_keep(current[i]);
            SplatCloud kept = keep_where(current, keep);
            report.removed_by_opacity += current.size() - kept.size();
            current = std::move(kept);
        }
    }
    if (stages.needle) {
        auto [filtered, removed] = needle_filter(current, cfg.needle_ratio_max);
        current = std::move(filtered);
        report.removed_by_needle = removed;
    }
    if (stages.sor) {
        auto [filtered, removed] = sor_filter(current, cfg.sor_k, cfg.sor_std_ratio);
        current = std::move(filtered);
        report.removed_by_sor = removed;
    }
    if (stages.connectivity) {
        auto [pruned, creport] = connectivity_prune(current, cfg.dbscan_eps,
                                                    cfg.dbscan_min_samples);
        current = std::move(pruned);
        report.removed_by_connectivity = creport.removed_by_connectivity;
        report.clusters_found = creport.clusters_found;
        report.largest_cluster_size = creport.largest_cluster_size;
        report.all_noise = creport.all_noise;
    }
    return {std::move(current), report};
}

void save_clean_report(const CleanReport& report, const std::string& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["input_count"] = report.input_count;
    doc["removed_by_opacity"] = report.removed_by_opacity;
    doc["removed_by_needle"] = report.removed_by_needle;
    doc["removed_by_sor"] = report.removed_by_sor;
    doc["removed_by_connectivity"] = report.removed_by_connectivity;
    doc["clusters_found"] = report.clusters_found;
    doc["largest_cluster_size"] = report.largest_cluster_size;
    doc["all_noise"] = report.all_noise;
    doc["output_count"] = report.output_count();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << doc.dump(2) << "\n";
}

}  // namespace s2t
