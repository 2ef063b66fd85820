// SPDX-License-Identifier: Apache-2.0
//
// Quantitative evaluation: multi-view consistency, ghost index, Chamfer
// distance, precision/recall/F1, and 2-D mIoU.

#pragma once

#include "splat2twin/depth_map.hpp"
#include "splat2twin/labeling.hpp"

#include <Eigen/Core>

#include <vector>

namespace s2t {

struct ConsistencyResult {
    std::vector<double> per_point;        // N_p^fg / N_p; -1 for invalid (N_p == 0)
    std::vector<int> visible_views;       // N_p
    std::vector<int> foreground_views;    // N_p^fg
    std::size_t valid_point_count = 0;    // points with N_p > 0
    double consistent_fraction = 0.0;     // percent of valid points >= high_conf
};

struct GeomFidelity {
    double chamfer = 0.0;  // metres
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double match_threshold = 0.005;  // metres
};

/// Per-point consistency over one label's masks: N_p counts views passing the
/// visibility gate, N_p^fg those whose projected pixel is in-mask. The
/// dataset fraction is the percentage of valid points (N_p > 0) with
/// consistency >= high_conf.
ConsistencyResult consistency_score(const SplatCloud& cloud,
                                    const std::vector<CameraView>& views,
                                    const std::vector<const Image8*>& label_masks,
                                    const std::vector<DepthMap>& depth_maps, double tau_depth,
                                    double high_conf);

/// 100 * (|FG(divisor_eval)| - |FG(divisor_ref)|) / |cloud|, clamped at 0.
/// FG counts splats voted to any object label at the given divisor.
double ghost_index(const SplatCloud& cloud, const std::vector<CameraView>& views,
                   const MaskSet& masks, const VoteConfig& cfg, double divisor_eval,
                   double divisor_ref);

/// Voxel-grid downsampling (centroid per occupied voxel, first-occurrence
/// order); resolution <= 0 returns the input unchanged.
std::vector<Eigen::Vector3d> voxel_downsample(const std::vector<Eigen::Vector3d>& points,
                                              double resolution);

/// Symmetric mean nearest-neighbour distance after voxel-downsampling both
/// sets at `resolution` (default 1 mm; pass 0 to compare raw sets).
/// Throws ArgumentError on empty input.
double chamfer(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b,
               double resolution = 0.001);

/// precision = fraction of pred within match_threshold of some gt point;
/// recall = fraction of gt within match_threshold of some pred point.
GeomFidelity precision_recall_f1(const std::vector<Eigen::Vector3d>& pred,
                                 const std::vector<Eigen::Vector3d>& gt, double match_threshold);

/// Mean IoU over (view,label) mask pairs with a non-empty union.
/// Throws ArgumentError on dimension mismatch or when no pair qualifies.
double miou_2d(const std::vector<std::pair<const Image8*, const Image8*>>& pred_gt_pairs);

}  // namespace s2t
