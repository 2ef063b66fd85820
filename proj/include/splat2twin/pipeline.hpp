// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: ingestion -> semantic lifting -> per-partition
// cleaning -> meshing -> optional evaluation, with machine-readable reports.
// The CLI is a thin wrapper over these entry points.

#pragma once

#include "splat2twin/clean.hpp"
#include "splat2twin/labeling.hpp"
#include "splat2twin/splat.hpp"

#include <map>
#include <string>
#include <vector>

namespace s2t {

struct MeshingConfig {
    double alpha = 0.0;        // <= 0 selects auto (alpha_scale * median NN)
    double alpha_scale = 3.0;
    int target_faces = 0;      // 0 disables decimation
    std::string format = "obj";  // obj | stl | both
};

struct PipelineConfig {
    std::string splats;
    std::string cameras;
    std::string masks_dir;
    std::string out_dir;
    VoteConfig vote;
    CleanConfig clean;
    StageMask stages = StageMask::full();
    MeshingConfig meshing;
    bool eval_enabled = false;
    std::string gt_dir;  // synth scene directory with gt/ subtree

    void validate() const;  // also checks referenced paths exist
};

/// Reads a config JSON; `overrides` are dotted key=value pairs applied on
/// top (e.g. "vote.threshold_divisor=1.2").
PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {});

struct PipelineResult {
    LiftResult lift;
    std::vector<std::string> labels;
    std::map<std::string, CleanReport> clean_reports;   // by label
    std::map<std::string, std::size_t> mesh_faces;      // by label (meshed partitions)
    std::vector<std::string> outputs;                   // files written, relative to out_dir
};

/// Runs the full pipeline; throws on stage failure after writing
/// out_dir/error.json and an out_dir/.partial marker. On success writes
/// manifest.json referencing every output file.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Geometric + semantic evaluation of a pipeline output directory against a
/// synth scene directory. Writes metrics.json into pred_dir and prints a
/// table to stdout.
void run_eval(const std::string& pred_dir, const std::string& scene_dir);

/// Cleaning ablation over the four stage-mask configurations; prints a
/// four-row table and writes ablation.json into the scene directory.
void run_ablation(const std::string& scene_dir);

/// Voting-threshold sweep {2.0, 1.8, 1.5, 1.2, 1.0}: consistency fraction of
/// object-labelled splats and ghost index versus the strictest divisor.
/// Prints a table and writes sweep.json into the scene directory.
void run_divisor_sweep(const std::string& scene_dir);

}  // namespace s2t
