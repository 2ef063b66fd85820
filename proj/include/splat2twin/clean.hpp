// SPDX-License-Identifier: Apache-2.0
//
// Physics-ready cleaning pipeline: intrinsic attribute filters (opacity,
// needle anisotropy), statistical outlier removal, and connectivity pruning
// that keeps only the largest DBSCAN cluster.

#pragma once

#include "splat2twin/splat.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace s2t {

struct CleanReport {
    std::size_t input_count = 0;
    std::size_t removed_by_opacity = 0;
    std::size_t removed_by_needle = 0;
    std::size_t removed_by_sor = 0;
    std::size_t removed_by_connectivity = 0;
    std::size_t clusters_found = 0;
    std::size_t largest_cluster_size = 0;
    bool all_noise = false;  // connectivity classified every point noise

    std::size_t output_count() const {
        return input_count - removed_by_opacity - removed_by_needle - removed_by_sor -
               removed_by_connectivity;
    }
};

/// Which stages clean_pipeline runs. The named presets mirror the four
/// ablation configurations (original / de-noise only / cluster only / full).
struct StageMask {
    bool opacity = true;
    bool needle = true;
    bool sor = true;
    bool connectivity = true;

    static StageMask none() { return {false, false, false, false}; }
    static StageMask denoise_only() { return {true, true, true, false}; }
    static StageMask cluster_only() { return {false, false, false, true}; }
    static StageMask full() { return {true, true, true, true}; }

    static StageMask parse(const std::string& name);  // throws ArgumentError
    std::string name() const;
};

/// Keeps splats with activated opacity >= alpha_min; order preserved.
std::pair<SplatCloud, std::size_t> opacity_filter(const SplatCloud& cloud, double alpha_min);

/// Removes splats with anisotropy_ratio > ratio_max; order preserved.
std::pair<SplatCloud, std::size_t> needle_filter(const SplatCloud& cloud, double ratio_max);

/// Statistical outlier removal: drops splats whose mean distance to their k
/// nearest neighbours exceeds (global mean + std_ratio * global std).
/// No-op with a warning when |cloud| <= k.
std::pair<SplatCloud, std::size_t> sor_filter(const SplatCloud& cloud, int k, double std_ratio);

/// 3-D DBSCAN on positions; keeps the largest cluster (ties: the cluster
/// holding the smallest original index). Noise is always pruned; when every
/// point is noise the result is empty and the report flags it.
std::pair<SplatCloud, CleanReport> connectivity_prune(const SplatCloud& cloud, double eps,
                                                      int min_samples);

/// Optional extra attribute predicate slotted into stage 1 (a colour
/// threshold could plug in here); splats failing it are counted under
/// removed_by_opacity.
using AttributePredicate = std::function<bool(const GaussianSplat&)>;

/// Runs the enabled stages in order opacity -> needle -> SOR -> connectivity.
std::pair<SplatCloud, CleanReport> clean_pipeline(const SplatCloud& cloud, const CleanConfig& cfg,
                                                  const StageMask& stages,
                                                  const AttributePredicate& extra_keep = nullptr);

void save_clean_report(const CleanReport& report, const std::string& path);

}  // namespace s2t
