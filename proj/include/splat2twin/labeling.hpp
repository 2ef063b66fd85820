// SPDX-License-Identifier: Apache-2.0
//
// Spatially-consistent semantic lifting: per-view depth-cluster gating,
// confidence-weighted consensus voting across views, KNN boundary
// refinement, and the iterative lift loop tying them together.

#pragma once

#include "splat2twin/camera.hpp"
#include "splat2twin/depth_map.hpp"
#include "splat2twin/masks.hpp"
#include "splat2twin/splat.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace s2t {

struct VoteConfig {
    double threshold_divisor = 1.5;  // tau_consensus = N_visible / divisor
    double tau_depth = 0.005;        // metres
    double gate_eps = 0.02;          // metres, 1-D DBSCAN over depth
    int gate_min_samples = 10;
    int max_iter = 3;
    int knn_k = 10;
    double knn_flip_fraction = 0.7;  // in (0.5, 1]
    double render_alpha_min = 0.0;   // opacity gate for visibility depth maps

    void validate() const;
};

/// Per-splat vote bookkeeping. label 0 is background; a splat is labelled an
/// object only when its weighted votes reach tau_consensus.
struct SplatVote {
    int label = 0;
    double weighted_votes = 0.0;  // gated score of the best-scoring label
    int visible_views = 0;        // N_p
    int foreground_views = 0;     // N_p^fg for the best-scoring label
};

struct LabelField {
    std::vector<std::string> labels;  // labels[0] == "background"
    std::vector<SplatVote> entries;

    std::size_t size() const { return entries.size(); }
    std::size_t count_with_label(int label) const;
};

struct GateResult {
    std::vector<std::uint8_t> weight;  // per splat, {0,1}
    int in_mask_count = 0;             // splats projecting inside the mask
    bool degenerate = false;           // fewer than min_samples in-mask splats
};

/// Gates one view's mask votes by 1-D DBSCAN over the camera depths of the
/// splats that project inside the mask. Members of the largest depth cluster
/// (ties: smaller mean depth) receive weight 1; everything else, including
/// out-of-mask splats, weight 0. When fewer than gate_min_samples splats
/// project inside the mask, all gates are 0 and `degenerate` is set — a
/// mask/geometry mismatch signal the caller can count.
GateResult depth_cluster_gate(const CameraView& view, const SplatCloud& cloud, const Image8& mask,
                              const VoteConfig& cfg);

/// Confidence-weighted consensus vote over visible views (Eq.-style rule:
/// label = object iff sum of gated in-mask weights >= N_visible / divisor).
/// Multi-label masks resolve by argmax score, ties by label order. Splats
/// visible in zero views are labelled background with visible_views = 0.
LabelField vote(const SplatCloud& cloud, const std::vector<CameraView>& views,
                const MaskSet& masks, const VoteConfig& cfg,
                const std::vector<DepthMap>& depth_maps, int* degenerate_gates = nullptr);

/// One synchronous pass: a splat flips to a neighbour label when at least
/// knn_flip_fraction of its knn_k nearest neighbours agree on that single
/// different label. All flips are computed from the input field.
LabelField knn_boundary_refine(const SplatCloud& cloud, const LabelField& field,
                               const VoteConfig& cfg);

struct LiftResult {
    LabelField field;
    std::vector<int> changes_per_iteration;  // padded with zeros after early stop
    int iterations_run = 0;
    int degenerate_gates = 0;  // total across views/labels/iterations
};

/// Runs up to max_iter rounds of (render depth maps -> gate -> vote ->
/// refine). Depth maps are re-rendered each round from the per-partition
/// subsets of the current labelling and merged by pixelwise minimum, so
/// occluders from every partition keep suppressing false votes. Stops early
/// once a round changes no label.
LiftResult iterative_lift(const SplatCloud& cloud, const std::vector<CameraView>& views,
                          const MaskSet& masks, const VoteConfig& cfg);

struct Partitions {
    std::vector<std::string> labels;      // parallel arrays, one entry per label
    std::vector<SplatCloud> clouds;       // clouds[0] == background partition
    std::vector<std::vector<int>> index;  // original splat indices, ascending
};

/// Disjoint, exhaustive split of the cloud by label; original splat indices
/// are preserved as provenance.
Partitions split_partitions(const SplatCloud& cloud, const LabelField& field);

/// Serializes per-splat labels, votes, N_p and N_p^fg as JSON.
void save_label_field(const LabelField& field, const std::string& path);
LabelField load_label_field(const std::string& path);

}  // namespace s2t
