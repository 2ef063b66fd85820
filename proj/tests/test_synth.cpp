// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splat2twin/camera.hpp"
#include "splat2twin/clean.hpp"
#include "splat2twin/synth.hpp"
#include "splat2twin/trimesh.hpp"

#include <filesystem>
#include <fstream>

using namespace s2t;
namespace fs = std::filesystem;

namespace {

SceneSpec basic_spec(std::uint64_t seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.surfel_spacing = 0.008;
    spec.camera_ring.count = 6;
    spec.primitives.push_back({Primitive::Shape::Box, "box", {0, 0, 0.05},
                               Eigen::Quaterniond::Identity(), {0.12, 0.12, 0.1}});
    spec.primitives.push_back({Primitive::Shape::Sphere, "ball", {0.2, 0, 0.05},
                               Eigen::Quaterniond::Identity(), Eigen::Vector3d::Ones(), 0.05});
    return spec;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("zero corruption tags everything surface") {
    const SynthScene scene = generate_scene(basic_spec(1));
    CHECK(scene.count_role(SplatRole::Surface) == scene.cloud.size());
    CHECK(scene.count_role(SplatRole::Floater) == 0);
    CHECK(scene.count_role(SplatRole::Ghost) == 0);
    CHECK(scene.count_role(SplatRole::Needle) == 0);
}

TEST_CASE("determinism: same seed, identical scene") {
    const SynthScene a = generate_scene(basic_spec(42));
    const SynthScene b = generate_scene(basic_spec(42));
    REQUIRE(a.cloud.size() == b.cloud.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i) {
        CHECK(a.cloud[i].position == b.cloud[i].position);
        CHECK(a.cloud[i].log_scale == b.cloud[i].log_scale);
        CHECK(a.cloud[i].rot == b.cloud[i].rot);
        CHECK(a.cloud[i].opacity_logit == b.cloud[i].opacity_logit);
        CHECK(a.roles[i] == b.roles[i]);
    }
    const SynthScene c = generate_scene(basic_spec(43));
    CHECK(a.cloud.size() == c.cloud.size());
    bool any_differs = false;
    for (std::size_t i = 0; i < a.cloud.size() && !any_differs; ++i)
        any_differs = a.cloud[i].position != c.cloud[i].position;
    CHECK(any_differs);
}

TEST_CASE("corruption counts and guarantees") {
    SceneSpec spec = basic_spec(7);
    spec.corruption.floater_fraction = 0.10;
    spec.corruption.ghost_fraction = 0.10;
    spec.corruption.needle_fraction = 0.05;
    const SynthScene scene = generate_scene(spec);

    const std::size_t n_surface = scene.count_role(SplatRole::Surface);
    CHECK(scene.count_role(SplatRole::Floater) ==
          std::size_t(std::lround(0.10 * double(n_surface))));
    CHECK(scene.count_role(SplatRole::Ghost) ==
          std::size_t(std::lround(0.10 * double(n_surface))));
    CHECK(scene.count_role(SplatRole::Needle) ==
          std::size_t(std::lround(0.05 * double(n_surface))));
    CHECK(n_surface + scene.count_role(SplatRole::Floater) + scene.count_role(SplatRole::Ghost) +
              scene.count_role(SplatRole::Needle) ==
          scene.cloud.size());

    SUBCASE("ghosts all fail the alpha >= 0.1 gate; surfaces all pass") {
        for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
            if (scene.roles[i] == SplatRole::Ghost) CHECK(scene.cloud[i].opacity() < 0.1);
            if (scene.roles[i] == SplatRole::Surface) CHECK(scene.cloud[i].opacity() >= 0.1);
        }
    }

    SUBCASE("needles all exceed anisotropy 10; surfaces stay isotropic") {
        for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
            if (scene.roles[i] == SplatRole::Needle)
                CHECK(anisotropy_ratio(scene.cloud[i]) > 10.0);
            if (scene.roles[i] == SplatRole::Surface)
                CHECK(anisotropy_ratio(scene.cloud[i]) == doctest::Approx(1.0));
        }
    }

    SUBCASE("floaters sit beyond 10x eps from every surface splat") {
        const double clearance = 10.0 * 0.02;
        std::vector<Eigen::Vector3d> surface = scene.surface_positions();
        for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
            if (scene.roles[i] != SplatRole::Floater) continue;
            const Eigen::Vector3d p = scene.cloud[i].centre();
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : surface) best = std::min(best, (p - q).norm());
            CHECK(best >= clearance);
        }
    }
}

TEST_CASE("sphere mask is a filled disc of the analytic projected radius") {
    SceneSpec spec;
    spec.seed = 3;
    spec.camera_ring.count = 1;
    spec.primitives.push_back({Primitive::Shape::Sphere, "ball", {0, 0, 0},
                               Eigen::Quaterniond::Identity(), Eigen::Vector3d::Ones(), 0.05});

    // On-axis camera 1 m away looking at the sphere centre.
    CameraView view;
    view.view_id = "v";
    view.fx = view.fy = 500.0;
    view.cx = 320.0;
    view.cy = 240.0;
    view.width = 640;
    view.height = 480;
    view.rotation = Eigen::Matrix3d::Identity();
    view.translation = Eigen::Vector3d(0, 0, 1.0);  // camera at z = -1

    const Image8 mask = render_gt_mask(view, spec, "ball");
    const double d = 1.0, r = 0.05;
    const double projected = view.fx * r / std::sqrt(d * d - r * r);
    const double area = double(mask.count_nonzero());
    const double disc_radius = std::sqrt(area / M_PI);
    CHECK(std::abs(disc_radius - projected) < 1.0);  // 1-px rasterization tolerance

    SUBCASE("label outside the frustum gives an empty mask") {
        SceneSpec far = spec;
        far.primitives[0].center = Eigen::Vector3d(0, 0, -50);  // behind the camera
        const Image8 empty = render_gt_mask(view, far, "ball");
        CHECK(empty.count_nonzero() == 0);
    }

    SUBCASE("dilation only adds pixels near the boundary") {
        const Image8 dilated = render_gt_mask(view, spec, "ball", 3);
        std::size_t added = 0;
        for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
            CHECK(dilated.pixels[i] >= mask.pixels[i]);  // superset
            added += dilated.pixels[i] && !mask.pixels[i];
        }
        CHECK(added > 0);
        // Every added pixel is within 3 px of an original foreground pixel.
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x) {
                if (!dilated.foreground(x, y) || mask.foreground(x, y)) continue;
                bool near = false;
                for (int dy = -3; dy <= 3 && !near; ++dy)
                    for (int dx = -3; dx <= 3 && !near; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
                        if (dx * dx + dy * dy <= 9 && mask.foreground(nx, ny)) near = true;
                    }
                CHECK(near);
            }
    }
}

TEST_CASE("masks respect occlusion between primitives") {
    SceneSpec spec;
    spec.seed = 4;
    spec.camera_ring.count = 1;
    // A big box between the camera (at z = -1) and a small sphere.
    spec.primitives.push_back({Primitive::Shape::Box, "blocker", {0, 0, -0.5},
                               Eigen::Quaterniond::Identity(), {0.4, 0.4, 0.1}});
    spec.primitives.push_back({Primitive::Shape::Sphere, "hidden", {0, 0, 0},
                               Eigen::Quaterniond::Identity(), Eigen::Vector3d::Ones(), 0.05});
    CameraView view;
    view.view_id = "v";
    view.fx = view.fy = 500.0;
    view.cx = 320.0;
    view.cy = 240.0;
    view.width = 640;
    view.height = 480;
    view.rotation = Eigen::Matrix3d::Identity();
    view.translation = Eigen::Vector3d(0, 0, 1.0);
    const Image8 hidden = render_gt_mask(view, spec, "hidden");
    CHECK(hidden.count_nonzero() == 0);
    const Image8 blocker = render_gt_mask(view, spec, "blocker");
    CHECK(blocker.count_nonzero() > 0);
}

TEST_CASE("gt_mesh analytic checks") {
    SUBCASE("unit box: 12 faces, volume 1") {
        SceneSpec spec;
        spec.primitives.push_back({Primitive::Shape::Box, "b", {0, 0, 0},
                                   Eigen::Quaterniond::Identity(), {1, 1, 1}});
        const TriMesh box = gt_mesh(spec, "b");
        CHECK(box.face_count() == 12);
        CHECK(is_closed(box));
        CHECK(signed_volume(box) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("sphere volume converges to 4/3 pi r^3") {
        SceneSpec spec;
        spec.primitives.push_back({Primitive::Shape::Sphere, "s", {1, 2, 3},
                                   Eigen::Quaterniond::Identity(), Eigen::Vector3d::Ones(), 1.0});
        double last_err = std::numeric_limits<double>::infinity();
        for (int res : {8, 16, 32, 64}) {
            const TriMesh sphere = gt_mesh(spec, "s", res);
            CHECK(is_closed(sphere));
            const double err = std::abs(signed_volume(sphere) - 4.0 * M_PI / 3.0);
            CHECK(err < last_err);
            last_err = err;
        }
        CHECK(last_err < 0.01);
    }

    SUBCASE("cylinder area within 1% of 2 pi r (r + h)") {
        SceneSpec spec;
        spec.primitives.push_back({Primitive::Shape::Cylinder, "c", {0, 0, 0},
                                   Eigen::Quaterniond::Identity(), Eigen::Vector3d::Ones(), 0.04,
                                   0.12});
        const TriMesh cyl = gt_mesh(spec, "c", 96);
        CHECK(is_closed(cyl));
        const double expect = 2.0 * M_PI * 0.04 * (0.04 + 0.12);
        CHECK(std::abs(surface_area(cyl) - expect) / expect < 0.01);
    }

    SUBCASE("unknown label throws") {
        SceneSpec spec;
        spec.primitives.push_back({Primitive::Shape::Box, "b", {0, 0, 0},
                                   Eigen::Quaterniond::Identity(), {1, 1, 1}});
        CHECK_THROWS(gt_mesh(spec, "nope"));
    }
}

TEST_CASE("scene spec JSON round trip") {
    SceneSpec spec = basic_spec(9);
    spec.corruption.floater_fraction = 0.2;
    spec.mask_dilation_px = 3;
    const fs::path path = fs::temp_directory_path() / "s2t_spec.json";
    save_scene_spec(spec, path.string());
    const SceneSpec loaded = load_scene_spec(path.string());
    CHECK(loaded.seed == spec.seed);
    CHECK(loaded.surfel_spacing == spec.surfel_spacing);
    CHECK(loaded.corruption.floater_fraction == spec.corruption.floater_fraction);
    CHECK(loaded.mask_dilation_px == spec.mask_dilation_px);
    REQUIRE(loaded.primitives.size() == spec.primitives.size());
    CHECK(loaded.primitives[0].label == spec.primitives[0].label);
    const SynthScene a = generate_scene(spec);
    const SynthScene b = generate_scene(loaded);
    REQUIRE(a.cloud.size() == b.cloud.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i)
        CHECK(a.cloud[i].position == b.cloud[i].position);
}

TEST_CASE("write_scene produces a byte-stable directory tree") {
    SceneSpec spec = basic_spec(77);
    spec.camera_ring.count = 3;
    spec.surfel_spacing = 0.015;  // keep the tree small
    const fs::path dir_a = fs::temp_directory_path() / "s2t_scene_a";
    const fs::path dir_b = fs::temp_directory_path() / "s2t_scene_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    write_scene(spec, dir_a.string());
    write_scene(spec, dir_b.string());

    std::vector<fs::path> rel_a;
    for (const auto& e : fs::recursive_directory_iterator(dir_a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), dir_a));
    std::sort(rel_a.begin(), rel_a.end());
    REQUIRE_FALSE(rel_a.empty());
    for (const auto& rel : rel_a) {
        CHECK(fs::exists(dir_b / rel));
        CHECK(slurp(dir_a / rel) == slurp(dir_b / rel));
    }

    SUBCASE("layout contract: per-view mask per label, cameras, tags") {
        int mask_count = 0;
        for (const auto& e : fs::directory_iterator(dir_a / "masks")) {
            (void)e;
            ++mask_count;
        }
        CHECK(mask_count == 3 * 2);  // 3 views x 2 labels
        CHECK(fs::exists(dir_a / "cameras.json"));
        CHECK(fs::exists(dir_a / "gt" / "tags.json"));
        CHECK(fs::exists(dir_a / "gt" / "surface_box.ply"));
        CHECK(fs::exists(dir_a / "gt" / "mesh_ball.obj"));
        const auto views = load_cameras((dir_a / "cameras.json").string());
        CHECK(views.size() == 3);
    }
}

TEST_CASE("ring cameras look at the scene") {
    const SceneSpec spec = basic_spec(13);
    const SynthScene scene = generate_scene(spec);
    for (const auto& view : scene.views) {
        CHECK_NOTHROW(view.validate());
        // look_at projects near the principal point
        const auto hit = project(view, spec.camera_ring.look_at);
        REQUIRE(hit.has_value());
        CHECK(std::abs(hit->u - view.cx) < 1.0);
        CHECK(std::abs(hit->v - view.cy) < 1.0);
    }
}
