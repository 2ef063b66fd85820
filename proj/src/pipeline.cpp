// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/pipeline.hpp"

#include "splat2twin/alpha_shape.hpp"
#include "splat2twin/camera.hpp"
#include "splat2twin/decimate.hpp"
#include "splat2twin/delaunay.hpp"
#include "splat2twin/depth_map.hpp"
#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"
#include "splat2twin/masks.hpp"
#include "splat2twin/mesh_io.hpp"
#include "splat2twin/metrics.hpp"
#include "splat2twin/parallel.hpp"
#include "splat2twin/ply_io.hpp"
#include "splat2twin/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace s2t {

namespace fs = std::filesystem;
using nlohmann::json;

void PipelineConfig::validate() const {
    vote.validate();
    clean.validate();
    if (splats.empty() || cameras.empty() || masks_dir.empty() || out_dir.empty())
        throw ArgumentError("pipeline config: splats, cameras, masks_dir and out_dir are required");
    if (!fs::exists(splats)) throw IoError(splats + ": splats file does not exist");
    if (!fs::exists(cameras)) throw IoError(cameras + ": cameras file does not exist");
    if (!fs::is_directory(masks_dir)) throw IoError(masks_dir + ": masks directory does not exist");
    if (meshing.format != "obj" && meshing.format != "stl" && meshing.format != "both")
        throw ArgumentError("pipeline config: meshing.format must be obj|stl|both");
    if (!(meshing.alpha_scale > 0.0))
        throw ArgumentError("pipeline config: meshing.alpha_scale must be positive");
    if (meshing.target_faces < 0)
        throw ArgumentError("pipeline config: meshing.target_faces must be >= 0");
    if (eval_enabled && !fs::is_directory(gt_dir))
        throw IoError(gt_dir + ": ground-truth directory does not exist");
}

namespace {

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ArgumentError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json* cursor = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (dot == std::string::npos) {
            // Parse as JSON scalar when possible, else keep the raw string.
            try {
                (*cursor)[part] = json::parse(value);
            } catch (const json::exception&) {
                (*cursor)[part] = value;
            }
            return;
        }
        cursor = &(*cursor)[part];
        start = dot + 1;
    }
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": invalid JSON (" + e.what() + ")");
    }
    for (const auto& o : overrides) apply_override(doc, o);

    PipelineConfig cfg;
    try {
        const auto& paths = doc.at("paths");
        cfg.splats = paths.at("splats").get<std::string>();
        cfg.cameras = paths.at("cameras").get<std::string>();
        cfg.masks_dir = paths.at("masks_dir").get<std::string>();
        cfg.out_dir = paths.at("out_dir").get<std::string>();
        if (doc.contains("vote")) {
            const auto& v = doc["vote"];
            cfg.vote.threshold_divisor = v.value("threshold_divisor", cfg.vote.threshold_divisor);
            cfg.vote.tau_depth = v.value("tau_depth", cfg.vote.tau_depth);
            cfg.vote.gate_eps = v.value("gate_eps", cfg.vote.gate_eps);
            cfg.vote.gate_min_samples = v.value("gate_min_samples", cfg.vote.gate_min_samples);
            cfg.vote.max_iter = v.value("max_iter", cfg.vote.max_iter);
            cfg.vote.knn_k = v.value("knn_k", cfg.vote.knn_k);
            cfg.vote.knn_flip_fraction = v.value("knn_flip_fraction", cfg.vote.knn_flip_fraction);
            cfg.vote.render_alpha_min = v.value("render_alpha_min", cfg.vote.render_alpha_min);
        }
        if (doc.contains("clean")) {
            const auto& c = doc["clean"];
            cfg.clean.alpha_min = c.value("alpha_min", cfg.clean.alpha_min);
            cfg.clean.needle_ratio_max = c.value("needle_ratio_max", cfg.clean.needle_ratio_max);
            cfg.clean.sor_k = c.value("sor_k", cfg.clean.sor_k);
            cfg.clean.sor_std_ratio = c.value("sor_std_ratio", cfg.clean.sor_std_ratio);
            cfg.clean.dbscan_eps = c.value("dbscan_eps", cfg.clean.dbscan_eps);
            cfg.clean.dbscan_min_samples =
                c.value("dbscan_min_samples", cfg.clean.dbscan_min_samples);
            if (c.contains("stages")) cfg.stages = StageMask::parse(c["stages"].get<std::string>());
        }
        if (doc.contains("meshing")) {
            const auto& m = doc["meshing"];
            if (m.contains("alpha")) {
                if (m["alpha"].is_string()) {
                    if (m["alpha"].get<std::string>() != "auto")
                        throw SchemaError(path + ": meshing.alpha must be a number or \"auto\"");
                    cfg.meshing.alpha = 0.0;
                } else {
                    cfg.meshing.alpha = m["alpha"].get<double>();
                }
            }
            cfg.meshing.alpha_scale = m.value("alpha_scale", cfg.meshing.alpha_scale);
            cfg.meshing.target_faces = m.value("target_faces", cfg.meshing.target_faces);
            cfg.meshing.format = m.value("format", cfg.meshing.format);
        }
        if (doc.contains("eval")) {
            cfg.eval_enabled = doc["eval"].value("enabled", false);
            cfg.gt_dir = doc["eval"].value("gt_dir", std::string());
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": malformed pipeline config (" + e.what() + ")");
    }
    cfg.validate();
    return cfg;
}

namespace {

void write_json(const json& doc, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << doc.dump(2) << "\n";
}

struct StageGuard {
    // Tracks the active stage so failures can be reported with context.
    std::string current = "load";
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    const fs::path out_root(config.out_dir);
    fs::create_directories(out_root);
    const fs::path partial_marker = out_root / ".partial";
    {
        std::ofstream marker(partial_marker, std::ios::trunc);
    }

    PipelineResult result;
    StageGuard stage;
    try {
        // load
        const SplatCloud cloud = load_ply(config.splats);
        const std::vector<CameraView> views = load_cameras(config.cameras);
        if (views.empty()) throw ValidationError(config.cameras + ": no views");
        const MaskSet masks = load_masks(config.masks_dir, views);

        // segment
        stage.current = "segment";
        result.lift = iterative_lift(cloud, views, masks, config.vote);
        result.labels = result.lift.field.labels;
        save_label_field(result.lift.field, (out_root / "label_field.json").string());
        result.outputs.push_back("label_field.json");
        const Partitions parts = split_partitions(cloud, result.lift.field);

        // clean
        stage.current = "clean";
        std::vector<SplatCloud> cleaned(parts.clouds.size());
        for (std::size_t l = 0; l < parts.clouds.size(); ++l) {
            const std::string& label = parts.labels[l];
            auto [kept, report] = clean_pipeline(parts.clouds[l], config.clean, config.stages);
            cleaned[l] = std::move(kept);
            result.clean_reports[label] = report;
            const std::string ply_name = "cleaned_" + label + ".ply";
            save_ply(cleaned[l], (out_root / ply_name).string());
            result.outputs.push_back(ply_name);
            const std::string report_name = "clean_report_" + label + ".json";
            save_clean_report(report, (out_root / report_name).string());
            result.outputs.push_back(report_name);
        }

        // mesh
        stage.current = "mesh";
        for (std::size_t l = 0; l < cleaned.size(); ++l) {
            const std::string& label = parts.labels[l];
            const auto points = cleaned[l].positions();
            if (points.size() < 4) {
                log::warn("mesh: partition '" + label + "' has " +
                          std::to_string(points.size()) + " splats; skipping");
                continue;
            }
            TriMesh mesh;
            try {
                const double alpha = config.meshing.alpha > 0.0
                                         ? config.meshing.alpha
                                         : suggest_alpha(points, config.meshing.alpha_scale);
                mesh = alpha_shape(delaunay3d(points), alpha);
            } catch (const DegenerateInputError& e) {
                log::warn(std::string("mesh: ") + e.what() + "; partition '" + label +
                          "' left unmeshed");
                continue;
            } catch (const EmptyMeshError& e) {
                log::warn(std::string("mesh: ") + e.what() + "; partition '" + label +
                          "' left unmeshed");
                continue;
            }
            if (config.meshing.target_faces > 0 &&
                int(mesh.face_count()) > config.meshing.target_faces)
                mesh = decimate(mesh, config.meshing.target_faces);
            result.mesh_faces[label] = mesh.face_count();
            if (config.meshing.format == "obj" || config.meshing.format == "both") {
                const std::string name = label + ".obj";
                export_mesh(mesh, (out_root / name).string(), MeshFormat::Obj);
                result.outputs.push_back(name);
            }
            if (config.meshing.format == "stl" || config.meshing.format == "both") {
                const std::string name = label + ".stl";
                export_mesh(mesh, (out_root / name).string(), MeshFormat::StlBinary);
                result.outputs.push_back(name);
            }
        }

        // manifest
        stage.current = "report";
        json manifest;
        manifest["schema_version"] = 1;
        manifest["inputs"] = {{"splats", config.splats},
                              {"cameras", config.cameras},
                              {"masks_dir", config.masks_dir}};
        manifest["labels"] = result.labels;
        manifest["stage_mask"] = config.stages.name();
        manifest["iterations_run"] = result.lift.iterations_run;
        manifest["label_changes"] = result.lift.changes_per_iteration;
        manifest["degenerate_gates"] = result.lift.degenerate_gates;
        json mesh_faces = json::object();
        for (const auto& [label, faces] : result.mesh_faces) mesh_faces[label] = faces;
        manifest["mesh_faces"] = std::move(mesh_faces);
        std::vector<std::string> outputs = result.outputs;
        outputs.push_back("manifest.json");
        std::sort(outputs.begin(), outputs.end());
        manifest["outputs"] = outputs;
        write_json(manifest, out_root / "manifest.json");
        result.outputs.push_back("manifest.json");
    } catch (const std::exception& e) {
        json err;
        err["schema_version"] = 1;
        err["stage"] = stage.current;
        err["error"] = e.what();
        write_json(err, out_root / "error.json");
        throw;
    }

    if (config.eval_enabled) run_eval(config.out_dir, config.gt_dir);
    fs::remove(partial_marker);
    return result;
}

namespace {

// Predicted per-view mask for a label: opaque-disc splatting of the splats
// the field assigned to that label (mirrors the depth renderer's footprint).
Image8 project_label_mask(const CameraView& view, const SplatCloud& cloud,
                          const LabelField& field, int label) {
    Image8 mask(view.width, view.height);
    const double f = std::max(view.fx, view.fy);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (field.entries[i].label != label) continue;
        const auto hit = project(view, cloud[i].centre());
        if (!hit) continue;
        const double radius = std::max(1.0, 2.0 * cloud[i].scale().maxCoeff() * f / hit->depth);
        const int x0 = std::max(0, int(std::floor(hit->u - radius)));
        const int x1 = std::min(view.width - 1, int(std::floor(hit->u + radius)));
        const int y0 = std::max(0, int(std::floor(hit->v - radius)));
        const int y1 = std::min(view.height - 1, int(std::floor(hit->v + radius)));
        for (int y = y0; y <= y1; ++y) {
            const double dy = hit->v - std::clamp(hit->v, double(y), double(y + 1));
            for (int x = x0; x <= x1; ++x) {
                const double dx = hit->u - std::clamp(hit->u, double(x), double(x + 1));
                if (dx * dx + dy * dy <= radius * radius) mask.at(x, y) = 255;
            }
        }
    }
    return mask;
}

std::vector<Eigen::Vector3d> ply_positions(const std::string& path) {
    return load_ply(path).positions();
}

}  // namespace

void run_eval(const std::string& pred_dir, const std::string& scene_dir) {
    const fs::path pred(pred_dir), scene(scene_dir);
    if (!fs::is_directory(pred)) throw IoError(pred_dir + ": prediction directory missing");
    if (!fs::is_directory(scene)) throw IoError(scene_dir + ": scene directory missing");

    const SplatCloud cloud = load_ply((scene / "splats.ply").string());
    const std::vector<CameraView> views = load_cameras((scene / "cameras.json").string());
    const MaskSet masks = load_masks((scene / "masks").string(), views);
    const LabelField field = load_label_field((pred / "label_field.json").string());

    json report;
    report["schema_version"] = 1;

    // Geometric fidelity per label: cleaned partition vs gt surface splats.
    json geometry = json::object();
    std::printf("%-14s %12s %10s %10s %10s\n", "label", "chamfer_m", "precision", "recall", "f1");
    for (std::size_t l = 1; l < field.labels.size(); ++l) {
        const std::string& label = field.labels[l];
        const fs::path pred_ply = pred / ("cleaned_" + label + ".ply");
        const fs::path gt_ply = scene / "gt" / ("surface_" + label + ".ply");
        if (!fs::exists(gt_ply)) throw IoError(gt_ply.string() + ": ground truth missing");
        if (!fs::exists(pred_ply)) throw IoError(pred_ply.string() + ": prediction missing");
        const auto pred_pts = ply_positions(pred_ply.string());
        const auto gt_pts = ply_positions(gt_ply.string());
        if (pred_pts.empty()) {
            geometry[label] = {{"error", "empty prediction"}};
            std::printf("%-14s %12s\n", label.c_str(), "empty");
            continue;
        }
        const double cd = chamfer(pred_pts, gt_pts);
        const GeomFidelity pf = precision_recall_f1(pred_pts, gt_pts, 0.005);
        geometry[label] = {{"chamfer", cd},
                           {"precision", pf.precision},
                           {"recall", pf.recall},
                           {"f1", pf.f1},
                           {"match_threshold", pf.match_threshold}};
        std::printf("%-14s %12.6f %10.4f %10.4f %10.4f\n", label.c_str(), cd, pf.precision,
                    pf.recall, pf.f1);
    }
    report["geometry"] = std::move(geometry);

    // Semantic metrics: consistency at 0.8 over object-labelled splats and
    // projected-mask mIoU against the ground-truth masks.
    std::vector<DepthMap> maps(views.size());
    parallel_for(views.size(), [&](std::size_t j) { maps[j] = render_depth(views[j], cloud, 0.0); });
    json semantic = json::object();
    for (std::size_t l = 1; l < field.labels.size(); ++l) {
        std::vector<const Image8*> label_masks(views.size(), nullptr);
        for (std::size_t j = 0; j < views.size(); ++j)
            label_masks[j] = masks.mask(views[j].view_id, int(l));
        const ConsistencyResult cons =
            consistency_score(cloud, views, label_masks, maps, 0.005, 0.8);
        std::size_t labelled = 0, consistent = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            if (field.entries[i].label != int(l) || cons.visible_views[i] == 0) continue;
            ++labelled;
            if (cons.per_point[i] >= 0.8) ++consistent;
        }
        std::vector<Image8> pred_masks;
        pred_masks.reserve(views.size());
        std::vector<std::pair<const Image8*, const Image8*>> pairs;
        for (std::size_t j = 0; j < views.size(); ++j)
            pred_masks.push_back(project_label_mask(views[j], cloud, field, int(l)));
        for (std::size_t j = 0; j < views.size(); ++j)
            if (label_masks[j]) pairs.emplace_back(&pred_masks[j], label_masks[j]);
        const double miou = pairs.empty() ? 0.0 : miou_2d(pairs);
        const double fraction =
            labelled == 0 ? 0.0 : 100.0 * double(consistent) / double(labelled);
        semantic[field.labels[l]] = {{"consistency_pct", fraction},
                                     {"labelled_points", labelled},
                                     {"miou_2d", miou}};
        std::printf("%-14s consistency %6.2f%%  mIoU %6.4f  (%zu labelled)\n",
                    field.labels[l].c_str(), fraction, miou, labelled);
    }
    report["semantic"] = std::move(semantic);

    write_json(report, pred / "metrics.json");
}

void run_ablation(const std::string& scene_dir) {
    const fs::path scene(scene_dir);
    const SplatCloud cloud = load_ply((scene / "splats.ply").string());

    std::vector<Eigen::Vector3d> gt;
    {
        std::ifstream in(scene / "gt" / "tags.json");
        if (!in) throw IoError((scene / "gt" / "tags.json").string() + ": missing tags");
        json tags;
        in >> tags;
        const auto roles = tags.at("roles").get<std::vector<std::string>>();
        if (roles.size() != cloud.size())
            throw ValidationError("ablation: tags do not cover the cloud");
        for (std::size_t i = 0; i < cloud.size(); ++i)
            if (roles[i] == "surface") gt.push_back(cloud[i].centre());
    }

    const CleanConfig clean_cfg;  // defaults; scenes are generated to match
    json rows = json::array();
    std::printf("%-14s %12s %10s %10s %12s\n", "config", "chamfer_m", "precision", "f1",
                "points_kept");
    for (const auto& [name, stages] :
         std::vector<std::pair<std::string, StageMask>>{{"original", StageMask::none()},
                                                        {"denoise_only", StageMask::denoise_only()},
                                                        {"cluster_only", StageMask::cluster_only()},
                                                        {"full", StageMask::full()}}) {
        auto [kept, report] = clean_pipeline(cloud, clean_cfg, stages);
        const auto pts = kept.positions();
        double cd = std::numeric_limits<double>::quiet_NaN();
        GeomFidelity pf;
        if (!pts.empty()) {
            cd = chamfer(pts, gt);
            pf = precision_recall_f1(pts, gt, 0.005);
        }
        rows.push_back({{"config", name},
                        {"chamfer", cd},
                        {"precision", pf.precision},
                        {"recall", pf.recall},
                        {"f1", pf.f1},
                        {"points_kept", kept.size()}});
        std::printf("%-14s %12.6f %10.4f %10.4f %12zu\n", name.c_str(), cd, pf.precision, pf.f1,
                    kept.size());
    }
    json doc;
    doc["schema_version"] = 1;
    doc["rows"] = std::move(rows);
    write_json(doc, scene / "ablation.json");
}

void run_divisor_sweep(const std::string& scene_dir) {
    const fs::path scene(scene_dir);
    const SplatCloud cloud = load_ply((scene / "splats.ply").string());
    const std::vector<CameraView> views = load_cameras((scene / "cameras.json").string());
    const MaskSet masks = load_masks((scene / "masks").string(), views);
    VoteConfig cfg;

    std::vector<DepthMap> maps(views.size());
    parallel_for(views.size(), [&](std::size_t j) {
        maps[j] = render_depth(views[j], cloud, cfg.render_alpha_min);
    });

    // Per-point consistency per label is divisor-independent; the sweep only
    // reweighs which points count as object-labelled.
    std::vector<ConsistencyResult> cons(masks.labels.size());
    for (std::size_t l = 1; l < masks.labels.size(); ++l) {
        std::vector<const Image8*> label_masks(views.size(), nullptr);
        for (std::size_t j = 0; j < views.size(); ++j)
            label_masks[j] = masks.mask(views[j].view_id, int(l));
        cons[l] = consistency_score(cloud, views, label_masks, maps, cfg.tau_depth, 0.8);
    }

    const std::vector<double> divisors{2.0, 1.8, 1.5, 1.2, 1.0};
    std::vector<std::size_t> fg_counts;
    json rows = json::array();
    std::printf("%-10s %16s %14s %12s\n", "divisor", "consistency_pct", "ghost_index", "fg_count");
    std::vector<LabelField> fields;
    for (double d : divisors) {
        VoteConfig c = cfg;
        c.threshold_divisor = d;
        fields.push_back(vote(cloud, views, masks, c, maps));
    }
    const LabelField& strictest = fields.back();
    std::size_t fg_ref = 0;
    for (const auto& e : strictest.entries) fg_ref += e.label != 0;
    for (std::size_t k = 0; k < divisors.size(); ++k) {
        const LabelField& field = fields[k];
        std::size_t labelled = 0, consistent = 0, fg = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const int l = field.entries[i].label;
            if (l == 0) continue;
            ++fg;
            if (cons[std::size_t(l)].visible_views[i] == 0) continue;
            ++labelled;
            if (cons[std::size_t(l)].per_point[i] >= 0.8) ++consistent;
        }
        const double fraction = labelled == 0 ? 0.0 : 100.0 * double(consistent) / double(labelled);
        const double ghost =
            fg > fg_ref ? 100.0 * double(fg - fg_ref) / double(cloud.size()) : 0.0;
        rows.push_back({{"divisor", divisors[k]},
                        {"consistency_pct", fraction},
                        {"ghost_index_pct", ghost},
                        {"foreground_count", fg}});
        std::printf("N/%-8.1f %15.2f%% %13.2f%% %12zu\n", divisors[k], fraction, ghost, fg);
    }
    json doc;
    doc["schema_version"] = 1;
    doc["reference_divisor"] = 1.0;
    doc["rows"] = std::move(rows);
    write_json(doc, scene / "sweep.json");
}

}  // namespace s2t
