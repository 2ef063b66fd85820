// SPDX-License-Identifier: Apache-2.0
//
// End-to-end CLI behaviour through a real subprocess; the binary path
// arrives via $SPLAT2TWIN_BIN (set by ctest).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splat2twin/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace s2t;

namespace {

std::string binary() {
    const char* env = std::getenv("SPLAT2TWIN_BIN");
    REQUIRE_MESSAGE(env != nullptr, "SPLAT2TWIN_BIN must point at the CLI binary");
    return env;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path workspace() {
    const fs::path dir = fs::temp_directory_path() / "s2t_cli_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path make_scene(const fs::path& dir) {
    SceneSpec spec;
    spec.seed = 700;
    spec.surfel_spacing = 0.012;
    spec.camera_ring.count = 5;
    spec.mask_dilation_px = 1;
    spec.corruption.floater_fraction = 0.05;
    spec.corruption.ghost_fraction = 0.05;
    spec.primitives.push_back({Primitive::Shape::Box, "table", {0, 0, -0.01},
                               Eigen::Quaterniond::Identity(), {0.4, 0.4, 0.02}});
    spec.primitives.push_back({Primitive::Shape::Box, "box", {0, 0, 0.05},
                               Eigen::Quaterniond::Identity(), {0.1, 0.1, 0.1}});
    fs::create_directories(dir);
    save_scene_spec(spec, (dir / "spec.json").string());
    return dir / "spec.json";
}

void write_pipeline_config(const fs::path& path, const fs::path& scene, const fs::path& out,
                           const std::string& extra = "") {
    std::ofstream cfg(path);
    cfg << "{\n"
        << "  \"paths\": {\n"
        << "    \"splats\": \"" << (scene / "splats.ply").string() << "\",\n"
        << "    \"cameras\": \"" << (scene / "cameras.json").string() << "\",\n"
        << "    \"masks_dir\": \"" << (scene / "masks").string() << "\",\n"
        << "    \"out_dir\": \"" << out.string() << "\"\n"
        << "  },\n"
        << "  \"vote\": {\"max_iter\": 2},\n"
        << "  \"meshing\": {\"target_faces\": 600}" << extra << "\n"
        << "}\n";
}

}  // namespace

TEST_CASE("synth determinism and pipeline end-to-end") {
    const fs::path root = workspace();
    const fs::path spec = make_scene(root / "scene_src");

    // synth twice -> identical directory trees
    const fs::path scene_a = root / "scene_a";
    const fs::path scene_b = root / "scene_b";
    fs::remove_all(scene_a);
    fs::remove_all(scene_b);
    REQUIRE(run("synth " + spec.string() + " " + scene_a.string()) == 0);
    REQUIRE(run("synth " + spec.string() + " " + scene_b.string()) == 0);
    for (const auto& e : fs::recursive_directory_iterator(scene_a)) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), scene_a);
        REQUIRE(fs::exists(scene_b / rel));
        std::ifstream fa(e.path(), std::ios::binary), fb(scene_b / rel, std::ios::binary);
        const std::string da((std::istreambuf_iterator<char>(fa)), {});
        const std::string db((std::istreambuf_iterator<char>(fb)), {});
        CHECK(da == db);
    }

    // pipeline on the scene
    const fs::path out = root / "out";
    fs::remove_all(out);
    const fs::path cfg = root / "config.json";
    write_pipeline_config(cfg, scene_a, out);
    REQUIRE(run("pipeline " + cfg.string()) == 0);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "label_field.json"));
    CHECK(fs::exists(out / "box.obj"));
    CHECK(fs::exists(out / "background.obj"));
    CHECK_FALSE(fs::exists(out / ".partial"));

    // every output file referenced from the manifest exists
    std::ifstream mf(out / "manifest.json");
    json manifest;
    mf >> manifest;
    for (const auto& f : manifest.at("outputs")) CHECK(fs::exists(out / f.get<std::string>()));

    // eval against the scene
    REQUIRE(run("eval " + out.string() + " " + scene_a.string()) == 0);
    CHECK(fs::exists(out / "metrics.json"));

    // ablation + sweep modes
    REQUIRE(run("eval --ablation " + scene_a.string()) == 0);
    CHECK(fs::exists(scene_a / "ablation.json"));
    REQUIRE(run("eval --sweep " + scene_a.string()) == 0);
    CHECK(fs::exists(scene_a / "sweep.json"));
}

TEST_CASE("pipeline error paths") {
    const fs::path root = workspace();
    const fs::path scene = root / "scene_err";
    if (!fs::exists(scene / "splats.ply")) {
        const fs::path spec = make_scene(root / "scene_err_src");
        REQUIRE(run("synth " + spec.string() + " " + scene.string()) == 0);
    }

    SUBCASE("missing masks directory exits 2 and names the path") {
        const fs::path cfg = root / "bad_masks.json";
        const fs::path out = root / "out_bad_masks";
        std::ofstream c(cfg);
        c << R"({"paths": {"splats": ")" << (scene / "splats.ply").string()
          << R"(", "cameras": ")" << (scene / "cameras.json").string()
          << R"(", "masks_dir": ")" << (scene / "no_such_masks").string() << R"(", "out_dir": ")"
          << out.string() << R"("}})";
        c.close();
        CHECK(run("pipeline " + cfg.string()) == 2);
    }

    SUBCASE("invalid divisor is rejected before any work") {
        const fs::path cfg = root / "bad_divisor.json";
        const fs::path out = root / "out_bad_divisor";
        write_pipeline_config(cfg, scene, out, ", \"vote2\": {}");
        CHECK(run("pipeline " + cfg.string() + " --set vote.threshold_divisor=0.5") == 2);
        CHECK_FALSE(fs::exists(out / "label_field.json"));
    }

    SUBCASE("config overrides change behaviour") {
        const fs::path cfg = root / "override.json";
        const fs::path out = root / "out_override";
        fs::remove_all(out);
        write_pipeline_config(cfg, scene, out);
        REQUIRE(run("pipeline " + cfg.string() + " --set vote.max_iter=1") == 0);
        std::ifstream mf(out / "manifest.json");
        json manifest;
        mf >> manifest;
        CHECK(manifest.at("iterations_run").get<int>() == 1);
    }
}

TEST_CASE("single-stage subcommands") {
    const fs::path root = workspace();
    const fs::path scene = root / "scene_stage";
    if (!fs::exists(scene / "splats.ply")) {
        const fs::path spec = make_scene(root / "scene_stage_src");
        REQUIRE(run("synth " + spec.string() + " " + scene.string()) == 0);
    }

    SUBCASE("clean emits a report") {
        const fs::path out_ply = root / "cleaned.ply";
        REQUIRE(run("clean " + (scene / "splats.ply").string() + " " + out_ply.string() +
                    " --stages full") == 0);
        CHECK(fs::exists(out_ply));
        CHECK(fs::exists(root / "cleaned.ply.report.json"));
    }

    SUBCASE("mesh emits an OBJ") {
        const fs::path out_obj = root / "scene.obj";
        REQUIRE(run("mesh " + (scene / "gt" / "surface_box.ply").string() + " " +
                    out_obj.string() + " --target-faces 500") == 0);
        CHECK(fs::exists(out_obj));
    }

    SUBCASE("segment writes partitions") {
        const fs::path out = root / "seg_out";
        fs::remove_all(out);
        REQUIRE(run("segment " + (scene / "splats.ply").string() + " " +
                    (scene / "cameras.json").string() + " " + (scene / "masks").string() + " " +
                    out.string()) == 0);
        CHECK(fs::exists(out / "label_field.json"));
        CHECK(fs::exists(out / "partition_box.ply"));
        CHECK(fs::exists(out / "partition_background.ply"));
    }

    SUBCASE("missing input exits 2") {
        CHECK(run("clean /no/such/file.ply /tmp/out.ply") == 2);
    }
}
