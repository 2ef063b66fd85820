// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic scenes: ground-truth splat clouds with injected
// floaters/ghosts/needles, camera rings, analytic masks and meshes. Every
// output is a pure function of the SceneSpec (seed included); randomness
// comes from mt19937_64 through 53-bit uniforms and Box-Muller normals, so
// scenes reproduce across standard library implementations.

#pragma once

#include "splat2twin/camera.hpp"
#include "splat2twin/image.hpp"
#include "splat2twin/splat.hpp"
#include "splat2twin/trimesh.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace s2t {

/// Seedable generator with a pinned algorithm (recorded in the scene
/// manifest as "mt19937_64/u53/box-muller").
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform();                      // [0, 1), 53-bit
    double uniform(double a, double b);    // [a, b)
    std::uint64_t uniform_int(std::uint64_t n);  // [0, n), by modulo
    double normal();                       // Box-Muller
    Eigen::Quaterniond unit_quaternion();

private:
    std::mt19937_64 state_;
    std::optional<double> spare_normal_;
};

enum class SplatRole : std::uint8_t { Surface = 0, Floater = 1, Ghost = 2, Needle = 3 };
const char* role_name(SplatRole role);

struct Primitive {
    enum class Shape { Box, Sphere, Cylinder } shape = Shape::Box;
    std::string label;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d dimensions = Eigen::Vector3d::Ones();  // box: full extents
    double radius = 0.05;                                  // sphere, cylinder
    double height = 0.1;                                   // cylinder (along local z)
};

struct SceneSpec {
    std::uint64_t seed = 0;
    double surfel_spacing = 0.004;  // metres
    double jitter_fraction = 0.25;  // of the spacing, tangential and normal
    struct {
        double floater_fraction = 0.0;
        double ghost_fraction = 0.0;
        double needle_fraction = 0.0;
    } corruption;
    struct {
        int count = 15;
        double radius = 1.0;
        double height = 0.7;
        Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
        int width = 640;
        int height_px = 480;
        double fx = 580.0;
        double fy = 580.0;
    } camera_ring;
    int mask_dilation_px = 0;
    std::vector<Primitive> primitives;

    void validate() const;
};

SceneSpec load_scene_spec(const std::string& path);
void save_scene_spec(const SceneSpec& spec, const std::string& path);

struct SynthScene {
    SplatCloud cloud;
    std::vector<SplatRole> roles;      // per splat
    std::vector<int> label_index;      // per splat; 0 = background/none
    std::vector<std::string> labels;   // labels[0] == "background"
    std::vector<CameraView> views;

    std::size_t count_role(SplatRole role) const;
    /// Positions of surface-tagged splats, optionally restricted to a label.
    std::vector<Eigen::Vector3d> surface_positions(int label = -1) const;
};

/// Deterministic scene generation. Splats are emitted surface splats first
/// (primitive order, then sample order), then ghosts, floaters and needles.
/// Ghosts are guaranteed to fail an alpha >= 0.1 opacity gate, needles to
/// exceed anisotropy ratio 10, and floaters to sit farther than 10x the
/// default clustering eps (0.02 m) from every surface splat.
SynthScene generate_scene(const SceneSpec& spec);

/// Analytic per-pixel ray casting with occlusion between primitives; a pixel
/// is foreground when the nearest hit belongs to `label`. Rays pass through
/// pixel centers; optional dilation adds a bleed margin for robustness
/// tests.
Image8 render_gt_mask(const CameraView& view, const SceneSpec& spec, const std::string& label,
                      int dilation_px = 0);

/// Analytic triangulation of the primitives carrying `label`.
/// resolution controls tessellation density for spheres and cylinders.
TriMesh gt_mesh(const SceneSpec& spec, const std::string& label, int resolution = 48);

/// Materializes the scene as a pipeline-ingestible directory:
/// splats.ply, cameras.json, masks/<view>__<label>.png, gt/ (tags.json,
/// surface_<label>.ply, mesh_<label>.obj) and scene_manifest.json.
void write_scene(const SceneSpec& spec, const std::string& out_dir);

}  // namespace s2t
