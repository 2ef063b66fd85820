// SPDX-License-Identifier: Apache-2.0
//
// splat2twin: convert Gaussian-splat point clouds, posed views and 2D masks
// into semantically partitioned, collision-ready meshes, and evaluate them.
//
// Subcommands: pipeline, synth, eval, segment, clean, mesh.
// Exit codes: 0 success, 1 runtime stage failure, 2 invalid config/input.

#include "splat2twin/alpha_shape.hpp"
#include "splat2twin/clean.hpp"
#include "splat2twin/decimate.hpp"
#include "splat2twin/delaunay.hpp"
#include "splat2twin/errors.hpp"
#include "splat2twin/labeling.hpp"
#include "splat2twin/log.hpp"
#include "splat2twin/masks.hpp"
#include "splat2twin/mesh_io.hpp"
#include "splat2twin/parallel.hpp"
#include "splat2twin/pipeline.hpp"
#include "splat2twin/ply_io.hpp"
#include "splat2twin/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

namespace {

namespace fs = std::filesystem;
using namespace s2t;

int cmd_pipeline(const std::string& config_path, const std::vector<std::string>& overrides) {
    PipelineConfig config;
    try {
        config = load_pipeline_config(config_path, overrides);
    } catch (const std::exception& e) {
        log::error(e.what());
        return 2;
    }
    try {
        const PipelineResult result = run_pipeline(config);
        std::size_t object_count = 0;
        for (std::size_t l = 1; l < result.labels.size(); ++l)
            object_count += result.lift.field.count_with_label(int(l));
        log::info("pipeline done: " + std::to_string(object_count) + " object splats across " +
                  std::to_string(result.labels.size() - 1) + " labels; outputs in " +
                  config.out_dir);
        return 0;
    } catch (const std::exception& e) {
        log::error(std::string("pipeline failed: ") + e.what());
        return 1;
    }
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    SceneSpec spec;
    try {
        spec = load_scene_spec(spec_path);
    } catch (const std::exception& e) {
        log::error(e.what());
        return 2;
    }
    try {
        write_scene(spec, out_dir);
        log::info("scene written to " + out_dir);
        return 0;
    } catch (const std::exception& e) {
        log::error(std::string("synth failed: ") + e.what());
        return 1;
    }
}

int cmd_eval(const std::string& pred_dir, const std::string& scene_dir, bool ablation,
             bool sweep) {
    try {
        if (ablation) {
            run_ablation(scene_dir.empty() ? pred_dir : scene_dir);
        } else if (sweep) {
            run_divisor_sweep(scene_dir.empty() ? pred_dir : scene_dir);
        } else {
            if (scene_dir.empty()) {
                log::error("eval: a scene directory with ground truth is required");
                return 2;
            }
            run_eval(pred_dir, scene_dir);
        }
        return 0;
    } catch (const IoError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log::error(std::string("eval failed: ") + e.what());
        return 1;
    }
}

int cmd_segment(const std::string& splats, const std::string& cameras, const std::string& masks,
                const std::string& out_dir) {
    try {
        const SplatCloud cloud = load_ply(splats);
        const auto views = load_cameras(cameras);
        const MaskSet mask_set = load_masks(masks, views);
        VoteConfig cfg;
        const LiftResult lift = iterative_lift(cloud, views, mask_set, cfg);
        fs::create_directories(out_dir);
        save_label_field(lift.field, (fs::path(out_dir) / "label_field.json").string());
        const Partitions parts = split_partitions(cloud, lift.field);
        for (std::size_t l = 0; l < parts.labels.size(); ++l)
            save_ply(parts.clouds[l],
                     (fs::path(out_dir) / ("partition_" + parts.labels[l] + ".ply")).string());
        for (std::size_t l = 0; l < parts.labels.size(); ++l)
            std::printf("%-14s %zu splats\n", parts.labels[l].c_str(), parts.clouds[l].size());
        return 0;
    } catch (const IoError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log::error(std::string("segment failed: ") + e.what());
        return 1;
    }
}

int cmd_clean(const std::string& in_ply, const std::string& out_ply, const std::string& stages,
              const CleanConfig& cfg) {
    try {
        const SplatCloud cloud = load_ply(in_ply);
        auto [kept, report] = clean_pipeline(cloud, cfg, StageMask::parse(stages));
        save_ply(kept, out_ply);
        save_clean_report(report, out_ply + ".report.json");
        std::printf("%-24s %zu\n", "input", report.input_count);
        std::printf("%-24s %zu\n", "removed_by_opacity", report.removed_by_opacity);
        std::printf("%-24s %zu\n", "removed_by_needle", report.removed_by_needle);
        std::printf("%-24s %zu\n", "removed_by_sor", report.removed_by_sor);
        std::printf("%-24s %zu\n", "removed_by_connectivity", report.removed_by_connectivity);
        std::printf("%-24s %zu\n", "output", report.output_count());
        return 0;
    } catch (const IoError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log::error(std::string("clean failed: ") + e.what());
        return 1;
    }
}

int cmd_mesh(const std::string& in_ply, const std::string& out_path, double alpha,
             double alpha_scale, int target_faces, const std::string& format) {
    try {
        const SplatCloud cloud = load_ply(in_ply);
        const auto points = cloud.positions();
        const double a = alpha > 0.0 ? alpha : suggest_alpha(points, alpha_scale);
        TriMesh mesh = alpha_shape(delaunay3d(points), a);
        if (target_faces > 0 && int(mesh.face_count()) > target_faces)
            mesh = decimate(mesh, target_faces);
        export_mesh(mesh, out_path,
                    format == "stl" ? MeshFormat::StlBinary : MeshFormat::Obj);
        std::printf("alpha %.6f  vertices %zu  faces %zu  closed %s\n", a, mesh.vertex_count(),
                    mesh.face_count(), is_closed(mesh) ? "yes" : "no");
        return 0;
    } catch (const IoError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log::error(std::string("mesh failed: ") + e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"splat2twin: Gaussian splat clouds to planning-ready collision meshes"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto* pipeline = app.add_subcommand("pipeline", "run the full pipeline from a config file");
    pipeline->add_option("config", config_path, "pipeline config JSON")->required();
    pipeline->add_option("--set", overrides, "override config keys, e.g. vote.max_iter=1");

    std::string spec_path, synth_out;
    auto* synth = app.add_subcommand("synth", "materialize a synthetic scene");
    synth->add_option("spec", spec_path, "scene spec JSON")->required();
    synth->add_option("out", synth_out, "output directory")->required();

    std::string eval_pred, eval_scene;
    bool eval_ablation = false, eval_sweep = false;
    auto* eval = app.add_subcommand("eval", "evaluate predictions against ground truth");
    eval->add_option("pred", eval_pred, "pipeline output directory (or scene dir for modes)")
        ->required();
    eval->add_option("scene", eval_scene, "synth scene directory with gt/");
    eval->add_flag("--ablation", eval_ablation, "run the four-stage cleaning ablation");
    eval->add_flag("--sweep", eval_sweep, "run the voting-threshold sweep");

    std::string seg_splats, seg_cameras, seg_masks, seg_out;
    auto* segment = app.add_subcommand("segment", "semantic lifting only");
    segment->add_option("splats", seg_splats)->required();
    segment->add_option("cameras", seg_cameras)->required();
    segment->add_option("masks", seg_masks)->required();
    segment->add_option("out", seg_out)->required();

    std::string clean_in, clean_out, clean_stages = "full";
    CleanConfig clean_cfg;
    auto* clean = app.add_subcommand("clean", "geometry cleaning only");
    clean->add_option("input", clean_in)->required();
    clean->add_option("output", clean_out)->required();
    clean->add_option("--stages", clean_stages, "none|denoise|cluster|full");
    clean->add_option("--alpha-min", clean_cfg.alpha_min);
    clean->add_option("--needle-ratio-max", clean_cfg.needle_ratio_max);
    clean->add_option("--sor-k", clean_cfg.sor_k);
    clean->add_option("--sor-std-ratio", clean_cfg.sor_std_ratio);
    clean->add_option("--eps", clean_cfg.dbscan_eps);
    clean->add_option("--min-samples", clean_cfg.dbscan_min_samples);

    std::string mesh_in, mesh_out, mesh_format = "obj";
    double mesh_alpha = 0.0, mesh_alpha_scale = 3.0;
    int mesh_target = 0;
    auto* mesh = app.add_subcommand("mesh", "alpha-shape meshing only");
    mesh->add_option("input", mesh_in)->required();
    mesh->add_option("output", mesh_out)->required();
    mesh->add_option("--alpha", mesh_alpha, "fixed alpha in metres (default: auto)");
    mesh->add_option("--alpha-scale", mesh_alpha_scale, "auto-alpha scale on median NN distance");
    mesh->add_option("--target-faces", mesh_target, "decimation target (0 = off)");
    mesh->add_option("--format", mesh_format, "obj|stl");

    CLI11_PARSE(app, argc, argv);

    if (pipeline->parsed()) return cmd_pipeline(config_path, overrides);
    if (synth->parsed()) return cmd_synth(spec_path, synth_out);
    if (eval->parsed()) return cmd_eval(eval_pred, eval_scene, eval_ablation, eval_sweep);
    if (segment->parsed()) return cmd_segment(seg_splats, seg_cameras, seg_masks, seg_out);
    if (clean->parsed()) return cmd_clean(clean_in, clean_out, clean_stages, clean_cfg);
    if (mesh->parsed())
        return cmd_mesh(mesh_in, mesh_out, mesh_alpha, mesh_alpha_scale, mesh_target, mesh_format);
    return 2;
}
