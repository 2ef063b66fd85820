// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "splat2twin/errors.hpp"
#include "splat2twin/ply_io.hpp"
#include "splat2twin/splat.hpp"
#include "splat2twin/synth.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace s2t;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "s2t_splatcore_tests";
    fs::create_directories(dir);
    return dir;
}

GaussianSplat splat_with(std::array<float, 3> scales, Eigen::Quaterniond rot = {1, 0, 0, 0},
                         float opacity_logit = 0.f) {
    GaussianSplat s;
    s.log_scale = {std::log(scales[0]), std::log(scales[1]), std::log(scales[2])};
    s.rot = {float(rot.w()), float(rot.x()), float(rot.y()), float(rot.z())};
    s.opacity_logit = opacity_logit;
    return s;
}

// Handcrafted binary PLY with the canonical 3DGS vertex layout.
void write_ply_bytes(const fs::path& path, const std::vector<std::array<float, 14>>& rows,
                     bool truncate_payload = false) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << rows.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
        << "property float opacity\n"
        << "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
        << "property float rot_0\nproperty float rot_1\nproperty float rot_2\n"
        << "property float rot_3\nend_header\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t bytes =
            (truncate_payload && i + 1 == rows.size()) ? 20 : sizeof(float) * 14;
        out.write(reinterpret_cast<const char*>(rows[i].data()), std::streamsize(bytes));
    }
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("covariance closed forms") {
    // scales (1,2,3), identity rotation -> diag(1,4,9)
    const auto s = splat_with({1.f, 2.f, 3.f});
    const Eigen::Matrix3d cov = covariance(s);
    Eigen::Matrix3d expect = Eigen::Vector3d(1, 4, 9).asDiagonal();
    CHECK((cov - expect).cwiseAbs().maxCoeff() < 1e-5);  // scales stored as float32 logs
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    // scales (1,2,1), 90 degrees about z -> diag(4,1,1)
    const Eigen::Quaterniond qz(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));
    const auto s2 = splat_with({1.f, 2.f, 1.f}, qz);
    const Eigen::Matrix3d cov2 = covariance(s2);
    expect = Eigen::Vector3d(4, 1, 1).asDiagonal();
    CHECK((cov2 - expect).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("covariance eigenvalues match squared scales (eigen-decomposition oracle)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
        while (q.norm() < 1e-6) q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng));
        q.normalize();
        const std::array<float, 3> scales{float(std::exp(u(rng))), float(std::exp(u(rng))),
                                          float(std::exp(u(rng)))};
        const auto s = splat_with(scales, q);
        const Eigen::Matrix3d cov = covariance(s);
        CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
        Eigen::Vector3d got = solver.eigenvalues();
        Eigen::Vector3d want = s.scale().cwiseProduct(s.scale());
        std::sort(want.data(), want.data() + 3);
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(got[k] - want[k]) < 1e-9 * std::max(1.0, want[k]));
        CHECK(solver.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("density closed forms") {
    auto s = splat_with({1.f, 1.f, 1.f});
    s.position = {1.f, 2.f, 3.f};
    CHECK(density_at(s, s.centre()) == 1.0);
    CHECK(density_at(s, s.centre() + Eigen::Vector3d(1, 0, 0)) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

    const auto s2 = splat_with({1.f, 2.f, 3.f});
    // quadratic form 1/1 + 4/4 + 9/9 = 3 -> exp(-1.5), at float32 scale precision
    CHECK(density_at(s2, Eigen::Vector3d(1, 2, 3)) ==
          doctest::Approx(std::exp(-1.5)).epsilon(1e-6));
}

TEST_CASE("density maximized at the centre") {
    Rng rng(99);
    const auto s = splat_with({0.5f, 1.5f, 0.9f},
                              Eigen::Quaterniond(0.3, 0.5, -0.2, 0.78).normalized());
    for (int k = 0; k < 1000; ++k) {
        Eigen::Vector3d d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        if (d.norm() < 1e-9) continue;
        CHECK(density_at(s, s.centre() + d) < 1.0);
    }
}

TEST_CASE("analytic log-density gradient matches central finite differences") {
    Rng rng(1234);
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        GaussianSplat s = splat_with(
            {float(std::exp(rng.uniform(-3, 0))), float(std::exp(rng.uniform(-3, 0))),
             float(std::exp(rng.uniform(-3, 0)))},
            rng.unit_quaternion());
        s.position = {float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                      float(rng.uniform(-1, 1))};
        const Eigen::Vector3d x = s.centre() + Eigen::Vector3d(rng.uniform(-0.5, 0.5),
                                                               rng.uniform(-0.5, 0.5),
                                                               rng.uniform(-0.5, 0.5));
        const Eigen::Vector3d analytic = log_density_gradient(s, x);
        Eigen::Vector3d fd;
        for (int axis = 0; axis < 3; ++axis) {
            Eigen::Vector3d lo = x, hi = x;
            lo[axis] -= h;
            hi[axis] += h;
            fd[axis] = (std::log(density_at(s, hi)) - std::log(density_at(s, lo))) / (2 * h);
        }
        const double rel = (analytic - fd).norm() / std::max(1e-12, analytic.norm());
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("anisotropy ratio") {
    CHECK(anisotropy_ratio(splat_with({0.01f, 0.01f, 0.01f})) == doctest::Approx(1.0));
    CHECK(anisotropy_ratio(splat_with({0.001f, 0.001f, 0.1f})) == doctest::Approx(100.0));
    // permutation invariance
    const double r1 = anisotropy_ratio(splat_with({0.2f, 0.05f, 0.6f}));
    const double r2 = anisotropy_ratio(splat_with({0.6f, 0.2f, 0.05f}));
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("load_ply: handcrafted single splat") {
    const fs::path path = temp_dir() / "one.ply";
    // x,y,z, f_dc*3, opacity, scale*3 (ln 0.01), rot wxyz
    const float ls = std::log(0.01f);
    write_ply_bytes(path, {{0.f, 0.f, 1.f, 0.1f, 0.2f, 0.3f, 0.f, ls, ls, ls, 1.f, 0.f, 0.f, 0.f}});
    const SplatCloud cloud = load_ply(path.string());
    REQUIRE(cloud.size() == 1);
    CHECK(cloud[0].opacity() == doctest::Approx(0.5).epsilon(1e-12));
    const Eigen::Vector3d scale = cloud[0].scale();
    for (int k = 0; k < 3; ++k) CHECK(scale[k] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(cloud[0].rotation().norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cloud[0].centre() == Eigen::Vector3d(0, 0, 1));
}

TEST_CASE("load_ply: empty vertex element") {
    const fs::path path = temp_dir() / "empty.ply";
    write_ply_bytes(path, {});
    const SplatCloud cloud = load_ply(path.string());
    CHECK(cloud.empty());
}

TEST_CASE("load_ply error paths") {
    const fs::path dir = temp_dir();

    SUBCASE("missing property named in the error") {
        const fs::path path = dir / "missing.ply";
        std::ofstream out(path, std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 0\n"
            << "property float x\nproperty float y\nproperty float z\nend_header\n";
        out.close();
        try {
            load_ply(path.string());
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("f_dc_0") != std::string::npos);
        }
    }

    SUBCASE("truncated payload reports a byte offset") {
        const fs::path path = dir / "trunc.ply";
        write_ply_bytes(path, {{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0},
                               {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0}},
                        /*truncate_payload=*/true);
        try {
            load_ply(path.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
        }
    }

    SUBCASE("NaN position reports the splat index") {
        const fs::path path = dir / "nan.ply";
        const float nan = std::numeric_limits<float>::quiet_NaN();
        write_ply_bytes(path, {{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0},
                               {nan, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0}});
        try {
            load_ply(path.string());
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("splat 1") != std::string::npos);
        }
    }
}

TEST_CASE("save_ply round trips are byte-identical") {
    const fs::path dir = temp_dir();

    SUBCASE("zero-splat cloud") {
        const fs::path path = dir / "zero.ply";
        save_ply(SplatCloud{}, path.string());
        const SplatCloud cloud = load_ply(path.string());
        CHECK(cloud.empty());
    }

    SUBCASE("synthetic 10k cloud: save -> load -> save reproduces bytes") {
        SceneSpec spec;
        spec.seed = 5;
        spec.surfel_spacing = 0.005;
        spec.corruption.ghost_fraction = 0.05;
        spec.corruption.needle_fraction = 0.05;
        spec.primitives.push_back(
            {Primitive::Shape::Box, "box", {0, 0, 0.05}, Eigen::Quaterniond::Identity(),
             {0.25, 0.25, 0.1}});
        const SynthScene scene = generate_scene(spec);
        REQUIRE(scene.cloud.size() > 5000);

        const fs::path p1 = dir / "synth_a.ply";
        const fs::path p2 = dir / "synth_b.ply";
        save_ply(scene.cloud, p1.string());
        const SplatCloud loaded = load_ply(p1.string());
        REQUIRE(loaded.size() == scene.cloud.size());
        save_ply(loaded, p2.string());
        CHECK(slurp(p1) == slurp(p2));
    }
}

TEST_CASE("bounds are finite for loaded clouds") {
    SceneSpec spec;
    spec.seed = 11;
    spec.surfel_spacing = 0.02;
    spec.primitives.push_back({Primitive::Shape::Sphere, "ball", {0, 0, 0},
                               Eigen::Quaterniond::Identity(), Eigen::Vector3d::Ones(), 0.1});
    const SynthScene scene = generate_scene(spec);
    const auto [lo, hi] = scene.cloud.bounds();
    CHECK(lo.allFinite());
    CHECK(hi.allFinite());
    CHECK((hi - lo).minCoeff() > 0.0);
}

TEST_CASE("CleanConfig validation") {
    CleanConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.alpha_min = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg.alpha_min = 0.1;
    cfg.needle_ratio_max = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}
