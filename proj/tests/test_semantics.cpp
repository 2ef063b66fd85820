// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "splat2twin/depth_map.hpp"
#include "splat2twin/labeling.hpp"
#include "splat2twin/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

using namespace s2t;

namespace {

CameraView identity_camera(int size = 100) {
    CameraView v;
    v.view_id = "test";
    v.fx = v.fy = 100.0;
    v.cx = v.cy = size / 2.0;
    v.width = v.height = size;
    return v;
}

GaussianSplat opaque_splat(const Eigen::Vector3d& pos, double scale = 0.005) {
    GaussianSplat s;
    s.position = {float(pos.x()), float(pos.y()), float(pos.z())};
    const float ls = float(std::log(scale));
    s.log_scale = {ls, ls, ls};
    s.opacity_logit = 10.f;
    return s;
}

MaskSet single_label_masks(const std::vector<CameraView>& views,
                           const std::vector<Image8>& masks, const std::string& label = "obj") {
    MaskSet set;
    set.labels = {"background", label};
    for (std::size_t j = 0; j < views.size(); ++j)
        set.masks.emplace(std::make_pair(views[j].view_id, 1), masks[j]);
    return set;
}

SceneSpec two_box_spec(std::uint64_t seed, double shelf_depth_offset = 0.35) {
    // A target box on a table plus a detached background "shelf" box behind
    // it, the classic source of mask bleed. Spacing stays well under the
    // 5 mm depth tolerance so slanted faces keep their visibility votes.
    SceneSpec spec;
    spec.seed = seed;
    spec.surfel_spacing = 0.004;
    spec.camera_ring.count = 12;
    spec.camera_ring.radius = 0.8;
    spec.camera_ring.height = 0.67;
    spec.mask_dilation_px = 2;
    spec.primitives.push_back({Primitive::Shape::Box, "table", {0, 0, -0.01},
                               Eigen::Quaterniond::Identity(), {0.6, 0.6, 0.02}});
    spec.primitives.push_back({Primitive::Shape::Box, "box", {0, 0, 0.05},
                               Eigen::Quaterniond::Identity(), {0.1, 0.1, 0.1}});
    spec.primitives.push_back({Primitive::Shape::Box, "shelf",
                               {0, shelf_depth_offset, 0.08},
                               Eigen::Quaterniond::Identity(), {0.2, 0.04, 0.16}});
    return spec;
}

struct SceneFixture {
    SynthScene scene;
    MaskSet masks;
    std::vector<DepthMap> maps;

    explicit SceneFixture(const SceneSpec& spec) : scene(generate_scene(spec)) {
        masks.labels = scene.labels;
        for (const auto& view : scene.views)
            for (std::size_t l = 1; l < scene.labels.size(); ++l)
                masks.masks.emplace(std::make_pair(view.view_id, int(l)),
                                    render_gt_mask(view, spec, scene.labels[l],
                                                   spec.mask_dilation_px));
        maps.reserve(scene.views.size());
        for (const auto& view : scene.views) maps.push_back(render_depth(view, scene.cloud, 0.0));
    }
};

}  // namespace

TEST_CASE("VoteConfig validation") {
    VoteConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.threshold_divisor = 0.5;
    CHECK_THROWS(cfg.validate());
    cfg = VoteConfig{};
    cfg.knn_flip_fraction = 0.5;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("depth_cluster_gate: two depth clusters, oracle agreement") {
    const CameraView view = identity_camera();
    Image8 mask(view.width, view.height, 255);  // everything in-mask
    VoteConfig cfg;
    cfg.gate_eps = 0.02;
    cfg.gate_min_samples = 10;

    Rng rng(17);
    SplatCloud cloud;
    std::vector<double> depths;
    for (int k = 0; k < 80; ++k) {
        const double z = 0.50 + rng.uniform(-0.002, 0.002);
        cloud.splats.push_back(opaque_splat({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), z}));
    }
    for (int k = 0; k < 10; ++k) {
        const double z = 0.80 + rng.uniform(-0.002, 0.002);
        cloud.splats.push_back(opaque_splat({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), z}));
    }
    const GateResult gate = depth_cluster_gate(view, cloud, mask, cfg);
    REQUIRE(gate.weight.size() == 90);
    CHECK_FALSE(gate.degenerate);
    for (std::size_t i = 0; i < 80; ++i) CHECK(gate.weight[i] == 1);
    for (std::size_t i = 80; i < 90; ++i) CHECK(gate.weight[i] == 0);

    // Brute-force 1-D epsilon-connectivity oracle over the same depths.
    for (const auto& s : cloud.splats) depths.push_back(project(view, s.centre())->depth);
    const auto labels = oracle::dbscan_reference_1d(depths, cfg.gate_eps, cfg.gate_min_samples);
    std::map<int, int> size;
    for (int l : labels)
        if (l >= 0) ++size[l];
    const int biggest =
        std::max_element(size.begin(), size.end(), [](const auto& a, const auto& b) {
            return a.second < b.second;
        })->first;
    for (std::size_t i = 0; i < 90; ++i) CHECK(gate.weight[i] == (labels[i] == biggest ? 1 : 0));
}

TEST_CASE("depth_cluster_gate edge cases") {
    const CameraView view = identity_camera();
    VoteConfig cfg;

    SUBCASE("single chain gets weight 1 everywhere") {
        Image8 mask(view.width, view.height, 255);
        SplatCloud cloud;
        for (int k = 0; k < 30; ++k)
            cloud.splats.push_back(opaque_splat({0.0, 0.0, 0.5 + 0.001 * k}));
        const GateResult gate = depth_cluster_gate(view, cloud, mask, cfg);
        CHECK(std::count(gate.weight.begin(), gate.weight.end(), 1) == 30);
    }

    SUBCASE("empty mask gates everything off") {
        Image8 mask(view.width, view.height, 0);
        SplatCloud cloud;
        for (int k = 0; k < 30; ++k) cloud.splats.push_back(opaque_splat({0, 0, 0.5}));
        const GateResult gate = depth_cluster_gate(view, cloud, mask, cfg);
        CHECK(std::count(gate.weight.begin(), gate.weight.end(), 1) == 0);
        CHECK(gate.degenerate);  // fewer than min_samples in-mask
    }

    SUBCASE("fewer than min_samples in-mask flags a mismatch") {
        Image8 mask(view.width, view.height, 255);
        SplatCloud cloud;
        for (int k = 0; k < 5; ++k) cloud.splats.push_back(opaque_splat({0, 0, 0.5}));
        const GateResult gate = depth_cluster_gate(view, cloud, mask, cfg);
        CHECK(gate.degenerate);
        CHECK(std::count(gate.weight.begin(), gate.weight.end(), 1) == 0);
    }
}

TEST_CASE("gate is invariant under splat permutation") {
    const CameraView view = identity_camera();
    Image8 mask(view.width, view.height, 255);
    VoteConfig cfg;
    Rng rng(5);
    SplatCloud cloud;
    for (int k = 0; k < 60; ++k)
        cloud.splats.push_back(opaque_splat(
            {rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), (k < 40 ? 0.5 : 0.9) + rng.uniform(-0.002, 0.002)}));

    std::vector<int> perm(cloud.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 shuffler(9);
    std::shuffle(perm.begin(), perm.end(), shuffler);
    SplatCloud permuted;
    for (int i : perm) permuted.splats.push_back(cloud.splats[std::size_t(i)]);

    const GateResult g1 = depth_cluster_gate(view, cloud, mask, cfg);
    const GateResult g2 = depth_cluster_gate(view, permuted, mask, cfg);
    for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(g1.weight[std::size_t(perm[i])] == g2.weight[i]);
}

TEST_CASE("vote threshold arithmetic on a hand-built scene") {
    // Three views of a single splat; mask membership controlled per view.
    const Eigen::Vector3d pos(0, 0, 0);
    SplatCloud cloud;
    for (int k = 0; k < 12; ++k)
        cloud.splats.push_back(opaque_splat(pos + Eigen::Vector3d(0.001 * k, 0, 0)));

    std::vector<CameraView> views;
    for (int j = 0; j < 3; ++j) {
        CameraView v = identity_camera();
        v.view_id = "v" + std::to_string(j);
        v.rotation = Eigen::Matrix3d::Identity();
        v.translation = Eigen::Vector3d(0, 0, 1.0);  // camera at z=-1 looking +z
        views.push_back(v);
    }
    std::vector<DepthMap> maps;
    for (const auto& v : views) maps.push_back(render_depth(v, cloud, 0.0));

    VoteConfig cfg;
    cfg.gate_min_samples = 5;

    const auto run = [&](int in_mask_views, double divisor) {
        std::vector<Image8> masks;
        for (int j = 0; j < 3; ++j)
            masks.emplace_back(views[0].width, views[0].height,
                               j < in_mask_views ? std::uint8_t(255) : std::uint8_t(0));
        MaskSet set = single_label_masks(views, masks);
        VoteConfig c = cfg;
        c.threshold_divisor = divisor;
        return vote(cloud, views, set, c, maps);
    };

    // Unanimous at divisor 1.0 (tau = 3).
    LabelField f = run(3, 1.0);
    for (const auto& e : f.entries) {
        CHECK(e.label == 1);
        CHECK(e.visible_views == 3);
        CHECK(e.foreground_views == 3);
    }
    // 2-of-3 at divisor 1.5 (tau = 2) -> object; 1-of-3 -> background.
    f = run(2, 1.5);
    for (const auto& e : f.entries) CHECK(e.label == 1);
    f = run(1, 1.5);
    for (const auto& e : f.entries) CHECK(e.label == 0);
}

TEST_CASE("vote: splat visible in zero views is background with zero counts") {
    SplatCloud cloud;
    cloud.splats.push_back(opaque_splat({0, 0, -5}));  // behind every camera
    CameraView v = identity_camera();
    v.translation = Eigen::Vector3d(0, 0, 1.0);
    std::vector<CameraView> views{v};
    std::vector<DepthMap> maps{render_depth(v, cloud, 0.0)};
    std::vector<Image8> masks{Image8(v.width, v.height, 255)};
    const LabelField f = vote(cloud, views, single_label_masks(views, masks), VoteConfig{}, maps);
    CHECK(f.entries[0].label == 0);
    CHECK(f.entries[0].visible_views == 0);
    CHECK(f.entries[0].foreground_views == 0);
}

TEST_CASE("knn_boundary_refine closed forms") {
    VoteConfig cfg;
    cfg.knn_k = 10;
    cfg.knn_flip_fraction = 0.7;

    SUBCASE("lone dissenting splat flips") {
        SplatCloud cloud;
        Rng rng(1);
        for (int k = 0; k < 11; ++k)
            cloud.splats.push_back(opaque_splat(
                {rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)}));
        LabelField field;
        field.labels = {"background", "obj"};
        field.entries.assign(cloud.size(), SplatVote{1, 3.0, 3, 3});
        field.entries[0].label = 0;
        const LabelField refined = knn_boundary_refine(cloud, field, cfg);
        CHECK(refined.entries[0].label == 1);
        for (std::size_t i = 1; i < refined.entries.size(); ++i)
            CHECK(refined.entries[i].label == 1);
    }

    SUBCASE("uniform field is a fixed point") {
        SplatCloud cloud;
        Rng rng(2);
        for (int k = 0; k < 50; ++k)
            cloud.splats.push_back(opaque_splat(
                {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)}));
        LabelField field;
        field.labels = {"background", "obj"};
        field.entries.assign(cloud.size(), SplatVote{1, 1.0, 1, 1});
        const LabelField refined = knn_boundary_refine(cloud, field, cfg);
        for (std::size_t i = 0; i < refined.entries.size(); ++i)
            CHECK(refined.entries[i].label == 1);
    }

    SUBCASE("an even split stays put below the flip fraction") {
        // Two parallel line clusters; boundary points see a 50/50 split.
        SplatCloud cloud;
        LabelField field;
        field.labels = {"background", "obj"};
        for (int k = 0; k < 20; ++k) {
            cloud.splats.push_back(opaque_splat({0.001 * k, 0.0, 0.0}));
            field.entries.push_back(SplatVote{k % 2, 0, 1, 0});
        }
        // Alternating labels: every splat's 10-NN is split 5/5; nothing may
        // reach the 0.7 fraction.
        const LabelField refined = knn_boundary_refine(cloud, field, VoteConfig{});
        for (std::size_t i = 0; i < refined.entries.size(); ++i)
            CHECK(refined.entries[i].label == field.entries[i].label);
    }
}

TEST_CASE("split_partitions bookkeeping") {
    SplatCloud cloud;
    for (int k = 0; k < 10; ++k) cloud.splats.push_back(opaque_splat({0.01 * k, 0, 0}));
    LabelField field;
    field.labels = {"background", "obj"};
    for (int k = 0; k < 10; ++k) field.entries.push_back(SplatVote{k % 2, 0, 0, 0});

    const Partitions parts = split_partitions(cloud, field);
    REQUIRE(parts.clouds.size() == 2);
    CHECK(parts.clouds[0].size() == 5);
    CHECK(parts.clouds[1].size() == 5);
    std::set<int> all;
    for (const auto& idx : parts.index)
        for (int i : idx) CHECK(all.insert(i).second);  // disjoint
    CHECK(all.size() == cloud.size());                  // exhaustive
    // Index lists identify the original splats.
    for (std::size_t l = 0; l < parts.clouds.size(); ++l)
        for (std::size_t k = 0; k < parts.index[l].size(); ++k)
            CHECK(parts.clouds[l][k].centre() ==
                  cloud[std::size_t(parts.index[l][k])].centre());
}

TEST_CASE("all-background field keeps the full cloud in the background partition") {
    SplatCloud cloud;
    for (int k = 0; k < 7; ++k) cloud.splats.push_back(opaque_splat({0.01 * k, 0, 0}));
    LabelField field;
    field.labels = {"background", "obj"};
    field.entries.assign(cloud.size(), SplatVote{});
    const Partitions parts = split_partitions(cloud, field);
    CHECK(parts.clouds[0].size() == cloud.size());
    CHECK(parts.clouds[1].empty());
}

TEST_CASE("vote monotonicity: looser divisor never shrinks the object set") {
    const SceneFixture fx(two_box_spec(31));
    VoteConfig cfg;
    std::set<std::size_t> previous;
    for (double divisor : {1.0, 1.2, 1.5, 1.8, 2.0}) {
        VoteConfig c = cfg;
        c.threshold_divisor = divisor;
        const LabelField f = vote(fx.scene.cloud, fx.scene.views, fx.masks, c, fx.maps);
        std::set<std::size_t> object;
        for (std::size_t i = 0; i < f.entries.size(); ++i)
            if (f.entries[i].label != 0) object.insert(i);
        CHECK(std::includes(object.begin(), object.end(), previous.begin(), previous.end()));
        previous = std::move(object);
    }
}

TEST_CASE("strictest threshold forces unanimity") {
    const SceneFixture fx(two_box_spec(32));
    VoteConfig cfg;
    cfg.threshold_divisor = 1.0;
    const LabelField f = vote(fx.scene.cloud, fx.scene.views, fx.masks, cfg, fx.maps);
    std::size_t object_count = 0;
    for (const auto& e : f.entries) {
        if (e.label == 0) continue;
        ++object_count;
        CHECK(e.foreground_views == e.visible_views);
    }
    CHECK(object_count > 0);
}

TEST_CASE("all-true masks label every visible splat object at any divisor") {
    SceneSpec spec;
    spec.seed = 33;
    spec.surfel_spacing = 0.01;
    spec.camera_ring.count = 6;
    spec.primitives.push_back({Primitive::Shape::Box, "obj", {0, 0, 0.05},
                               Eigen::Quaterniond::Identity(), {0.15, 0.15, 0.1}});
    const SynthScene scene = generate_scene(spec);
    std::vector<Image8> full_masks;
    for (const auto& v : scene.views) full_masks.emplace_back(v.width, v.height, 255);
    const MaskSet masks = single_label_masks(scene.views, full_masks);
    std::vector<DepthMap> maps;
    for (const auto& v : scene.views) maps.push_back(render_depth(v, scene.cloud, 0.0));

    for (double divisor : {1.0, 1.5, 2.0}) {
        VoteConfig cfg;
        cfg.threshold_divisor = divisor;
        const LabelField f = vote(scene.cloud, scene.views, masks, cfg, maps);
        for (const auto& e : f.entries) {
            if (e.visible_views == 0) continue;
            CHECK(e.label == 1);
        }
    }
}

TEST_CASE("iterative_lift: convergence reporting and loop contract") {
    const SceneSpec spec = two_box_spec(34);
    const SceneFixture fx(spec);
    VoteConfig cfg;
    cfg.max_iter = 3;
    const LiftResult lift = iterative_lift(fx.scene.cloud, fx.scene.views, fx.masks, cfg);
    REQUIRE(lift.changes_per_iteration.size() == 3);
    CHECK(lift.changes_per_iteration[0] > 0);
    // A fixed point reached at some iteration reports zero changes afterward.
    CHECK(lift.changes_per_iteration[2] == 0);

    VoteConfig one;
    one.max_iter = 1;
    const LiftResult single = iterative_lift(fx.scene.cloud, fx.scene.views, fx.masks, one);
    // max_iter=1 equals one vote+refine pass.
    std::vector<DepthMap> maps;
    for (const auto& v : fx.scene.views) maps.push_back(render_depth(v, fx.scene.cloud, 0.0));
    const LabelField direct =
        knn_boundary_refine(fx.scene.cloud, vote(fx.scene.cloud, fx.scene.views, fx.masks, one, maps), one);
    REQUIRE(single.field.size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(single.field.entries[i].label == direct.entries[i].label);
}

TEST_CASE("shelf fragment leaking into dilated masks ends up background") {
    const SceneSpec spec = two_box_spec(35);
    const SynthScene scene = generate_scene(spec);
    // Only the target box gets a mask; the dilated silhouette bleeds onto
    // the table and, from some views, onto the shelf behind.
    MaskSet masks;
    masks.labels = {"background", "box"};
    for (const auto& view : scene.views)
        masks.masks.emplace(std::make_pair(view.view_id, 1),
                            render_gt_mask(view, spec, "box", 4));

    VoteConfig cfg;
    const LiftResult lift = iterative_lift(scene.cloud, scene.views, masks, cfg);

    const int box_label = 1;
    std::size_t shelf_total = 0, shelf_as_object = 0, box_total = 0, box_as_object = 0,
                box_visible = 0;
    const int shelf_scene_label = [&] {
        for (std::size_t l = 0; l < scene.labels.size(); ++l)
            if (scene.labels[l] == "shelf") return int(l);
        return -1;
    }();
    const int box_scene_label = [&] {
        for (std::size_t l = 0; l < scene.labels.size(); ++l)
            if (scene.labels[l] == "box") return int(l);
        return -1;
    }();
    for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
        if (scene.roles[i] != SplatRole::Surface) continue;
        if (scene.label_index[i] == shelf_scene_label) {
            ++shelf_total;
            shelf_as_object += lift.field.entries[i].label == box_label;
        }
        if (scene.label_index[i] == box_scene_label) {
            ++box_total;
            box_as_object += lift.field.entries[i].label == box_label;
            box_visible += lift.field.entries[i].visible_views > 0;
        }
    }
    REQUIRE(shelf_total > 0);
    REQUIRE(box_total > 0);
    CHECK(shelf_as_object == 0);  // depth gate rejects the shelf
    // Recall over splats that can vote at all; occluded ones (the box
    // bottom) stay background by contract rather than by guesswork.
    CHECK(double(box_as_object) >= 0.99 * double(box_visible));
    CHECK(box_visible > box_total / 2);
}

TEST_CASE("label field JSON round trip") {
    LabelField field;
    field.labels = {"background", "a", "b"};
    field.entries = {SplatVote{1, 2.0, 3, 2}, SplatVote{0, 0.0, 0, 0}, SplatVote{2, 5.0, 5, 5}};
    const auto path = std::filesystem::temp_directory_path() / "s2t_field.json";
    save_label_field(field, path.string());
    const LabelField loaded = load_label_field(path.string());
    REQUIRE(loaded.size() == field.size());
    CHECK(loaded.labels == field.labels);
    for (std::size_t i = 0; i < field.size(); ++i) {
        CHECK(loaded.entries[i].label == field.entries[i].label);
        CHECK(loaded.entries[i].weighted_votes == field.entries[i].weighted_votes);
        CHECK(loaded.entries[i].visible_views == field.entries[i].visible_views);
        CHECK(loaded.entries[i].foreground_views == field.entries[i].foreground_views);
    }
}
