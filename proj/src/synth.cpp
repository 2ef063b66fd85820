// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/synth.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/mesh_io.hpp"
#include "splat2twin/ply_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace s2t {

namespace fs = std::filesystem;
using nlohmann::json;

double Rng::uniform() { return double(state_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) { return n == 0 ? 0 : state_() % n; }

double Rng::normal() {
    if (spare_normal_) {
        const double v = *spare_normal_;
        spare_normal_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_normal_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::Quaterniond Rng::unit_quaternion() {
    Eigen::Vector4d q(normal(), normal(), normal(), normal());
    while (q.norm() < 1e-12) q = Eigen::Vector4d(normal(), normal(), normal(), normal());
    q.normalize();
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
}

const char* role_name(SplatRole role) {
    switch (role) {
        case SplatRole::Surface: return "surface";
        case SplatRole::Floater: return "floater";
        case SplatRole::Ghost: return "ghost";
        case SplatRole::Needle: return "needle";
    }
    return "?";
}

void SceneSpec::validate() const {
    if (!(surfel_spacing > 0.0)) throw ArgumentError("SceneSpec: surfel_spacing must be positive");
    if (!(jitter_fraction >= 0.0 && jitter_fraction < 0.5))
        throw ArgumentError("SceneSpec: jitter_fraction must lie in [0, 0.5)");
    const auto check_fraction = [](double f, const char* name) {
        if (!(f >= 0.0 && f <= 1.0))
            throw ArgumentError(std::string("SceneSpec: ") + name + " must lie in [0,1]");
    };
    check_fraction(corruption.floater_fraction, "floater_fraction");
    check_fraction(corruption.ghost_fraction, "ghost_fraction");
    check_fraction(corruption.needle_fraction, "needle_fraction");
    if (camera_ring.count < 1) throw ArgumentError("SceneSpec: camera ring needs >= 1 view");
    if (camera_ring.width <= 0 || camera_ring.height_px <= 0 || camera_ring.fx <= 0 ||
        camera_ring.fy <= 0)
        throw ArgumentError("SceneSpec: camera intrinsics must be positive");
    if (mask_dilation_px < 0) throw ArgumentError("SceneSpec: mask dilation must be >= 0");
    if (primitives.empty()) throw ArgumentError("SceneSpec: at least one primitive required");
    for (const auto& p : primitives) {
        if (p.label.empty() || p.label == "background")
            throw ArgumentError("SceneSpec: every primitive needs a non-background label");
        if (p.shape == Primitive::Shape::Box && !(p.dimensions.minCoeff() > 0.0))
            throw ArgumentError("SceneSpec: box dimensions must be positive");
        if (p.shape != Primitive::Shape::Box && !(p.radius > 0.0))
            throw ArgumentError("SceneSpec: radius must be positive");
        if (p.shape == Primitive::Shape::Cylinder && !(p.height > 0.0))
            throw ArgumentError("SceneSpec: cylinder height must be positive");
    }
}

namespace {

constexpr double kSurfaceOpacity = 0.95;
constexpr double kFloaterClearance = 0.25;   // > 10 * default dbscan eps (0.02)
constexpr double kFloaterClusterRadius = 0.008;  // < default eps: one tight cluster

float logit(double p) { return float(std::log(p / (1.0 - p))); }

struct Surfel {
    Eigen::Vector3d position;
    Eigen::Vector3d normal;
};

void sample_box(const Primitive& prim, double spacing, double jitter, Rng& rng,
                std::vector<Surfel>& out) {
    const Eigen::Vector3d half = 0.5 * prim.dimensions;
    // axis: face normal direction; u,v: in-face axes.
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = -1; side <= 1; side += 2) {
            const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
            const int nu = std::max(1, int(std::lround(prim.dimensions[ua] / spacing)));
            const int nv = std::max(1, int(std::lround(prim.dimensions[va] / spacing)));
            for (int iu = 0; iu < nu; ++iu) {
                for (int iv = 0; iv < nv; ++iv) {
                    Eigen::Vector3d local;
                    local[axis] = side * half[axis] + jitter * rng.uniform(-1.0, 1.0);
                    const double fu = (iu + 0.5) / nu, fv = (iv + 0.5) / nv;
                    local[ua] = std::clamp((fu * 2.0 - 1.0) * half[ua] +
                                               jitter * rng.uniform(-1.0, 1.0),
                                           -half[ua], half[ua]);
                    local[va] = std::clamp((fv * 2.0 - 1.0) * half[va] +
                                               jitter * rng.uniform(-1.0, 1.0),
                                           -half[va], half[va]);
                    Eigen::Vector3d n = Eigen::Vector3d::Zero();
                    n[axis] = side;
                    out.push_back({prim.center + prim.rotation * local, prim.rotation * n});
                }
            }
        }
    }
}

void sample_sphere(const Primitive& prim, double spacing, double jitter, Rng& rng,
                   std::vector<Surfel>& out) {
    const double area = 4.0 * std::numbers::pi * prim.radius * prim.radius;
    const int n = std::max(4, int(std::lround(area / (spacing * spacing))));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n;
        const double r_xy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * k;
        Eigen::Vector3d dir(r_xy * std::cos(phi), r_xy * std::sin(phi), z);
        dir += (jitter / prim.radius) *
               Eigen::Vector3d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                               rng.uniform(-1.0, 1.0));
        dir.normalize();
        const double rad = prim.radius + jitter * rng.uniform(-1.0, 1.0);
        out.push_back({prim.center + prim.rotation * (rad * dir), prim.rotation * dir});
    }
}

void sample_cylinder(const Primitive& prim, double spacing, double jitter, Rng& rng,
                     std::vector<Surfel>& out) {
    const double circumference = 2.0 * std::numbers::pi * prim.radius;
    const int n_seg = std::max(3, int(std::lround(circumference / spacing)));
    const int n_h = std::max(1, int(std::lround(prim.height / spacing)));
    const double hh = 0.5 * prim.height;
    for (int ih = 0; ih < n_h; ++ih) {
        for (int is = 0; is < n_seg; ++is) {
            const double phi =
                2.0 * std::numbers::pi * (is + 0.5) / n_seg + rng.uniform(-1.0, 1.0) * jitter / prim.radius;
            const double z = std::clamp((ih + 0.5) / n_h * prim.height - hh +
                                            jitter * rng.uniform(-1.0, 1.0),
                                        -hh, hh);
            const Eigen::Vector3d n(std::cos(phi), std::sin(phi), 0.0);
            const double rad = prim.radius + jitter * rng.uniform(-1.0, 1.0);
            out.push_back(
                {prim.center + prim.rotation * Eigen::Vector3d(rad * n.x(), rad * n.y(), z),
                 prim.rotation * n});
        }
    }
    // Caps: concentric rings.
    for (int side = -1; side <= 1; side += 2) {
        const int n_r = std::max(1, int(std::lround(prim.radius / spacing)));
        for (int ir = 0; ir < n_r; ++ir) {
            const double r = (ir + 0.5) / n_r * prim.radius;
            const int n_phi = std::max(1, int(std::lround(2.0 * std::numbers::pi * r / spacing)));
            for (int ip = 0; ip < n_phi; ++ip) {
                const double phi = 2.0 * std::numbers::pi * (ip + 0.5) / n_phi;
                const double z = side * hh + jitter * rng.uniform(-1.0, 1.0);
                out.push_back({prim.center + prim.rotation * Eigen::Vector3d(r * std::cos(phi),
                                                                             r * std::sin(phi), z),
                               prim.rotation * Eigen::Vector3d(0, 0, double(side))});
            }
        }
    }
}

GaussianSplat make_splat(const Eigen::Vector3d& pos, double iso_scale, double opacity,
                         int label_index) {
    GaussianSplat s;
    for (int k = 0; k < 3; ++k) s.position[std::size_t(k)] = float(pos[k]);
    const float ls = float(std::log(iso_scale));
    s.log_scale = {ls, ls, ls};
    s.rot = {1.f, 0.f, 0.f, 0.f};
    s.opacity_logit = logit(opacity);
    // A fixed per-label tint keeps partition outputs tellable apart.
    s.colour_dc = {float(0.2 + 0.15 * (label_index % 5)), float(0.2 + 0.1 * (label_index % 7)),
                   float(0.8 - 0.1 * (label_index % 5))};
    return s;
}

CameraView ring_view(const SceneSpec& spec, int k) {
    const auto& ring = spec.camera_ring;
    const double angle = 2.0 * std::numbers::pi * k / ring.count;
    const Eigen::Vector3d pos = ring.look_at + Eigen::Vector3d(ring.radius * std::cos(angle),
                                                               ring.radius * std::sin(angle),
                                                               ring.height);
    Eigen::Vector3d forward = (ring.look_at - pos).normalized();
    Eigen::Vector3d up(0.0, 0.0, 1.0);
    if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d(0.0, 1.0, 0.0);
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right).normalized();

    CameraView v;
    char buf[16];
    std::snprintf(buf, sizeof buf, "view_%03d", k);
    v.view_id = buf;
    v.fx = ring.fx;
    v.fy = ring.fy;
    v.cx = ring.width / 2.0;
    v.cy = ring.height_px / 2.0;
    v.width = ring.width;
    v.height = ring.height_px;
    v.rotation.row(0) = right;
    v.rotation.row(1) = down;
    v.rotation.row(2) = forward;
    v.translation = -(v.rotation * pos);
    v.validate();
    return v;
}

// Ray-primitive intersection in the primitive's local frame; returns the
// nearest positive t or nothing.
std::optional<double> ray_hit(const Primitive& prim, const Eigen::Vector3d& origin,
                              const Eigen::Vector3d& dir) {
    const Eigen::Quaterniond inv = prim.rotation.conjugate();
    const Eigen::Vector3d o = inv * (origin - prim.center);
    const Eigen::Vector3d d = inv * dir;

    if (prim.shape == Primitive::Shape::Sphere) {
        const double b = o.dot(d);
        const double c = o.squaredNorm() - prim.radius * prim.radius;
        const double disc = b * b - c;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        for (double t : {-b - sq, -b + sq})
            if (t > 1e-9) return t;
        return std::nullopt;
    }
    if (prim.shape == Primitive::Shape::Box) {
        const Eigen::Vector3d half = 0.5 * prim.dimensions;
        double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            if (std::abs(d[k]) < 1e-15) {
                if (std::abs(o[k]) > half[k]) return std::nullopt;
                continue;
            }
            double ta = (-half[k] - o[k]) / d[k];
            double tb = (half[k] - o[k]) / d[k];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        if (t0 > t1) return std::nullopt;
        if (t0 > 1e-9) return t0;
        if (t1 > 1e-9) return t1;
        return std::nullopt;
    }
    // Cylinder: side plus caps.
    const double hh = 0.5 * prim.height;
    double best = std::numeric_limits<double>::infinity();
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-15) {
        const double b = o.x() * d.x() + o.y() * d.y();
        const double c = o.x() * o.x() + o.y() * o.y() - prim.radius * prim.radius;
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / a, (-b + sq) / a}) {
                if (t <= 1e-9 || t >= best) continue;
                if (std::abs(o.z() + t * d.z()) <= hh) best = t;
            }
        }
    }
    if (std::abs(d.z()) > 1e-15) {
        for (int side = -1; side <= 1; side += 2) {
            const double t = (side * hh - o.z()) / d.z();
            if (t <= 1e-9 || t >= best) continue;
            const double x = o.x() + t * d.x(), y = o.y() + t * d.y();
            if (x * x + y * y <= prim.radius * prim.radius) best = t;
        }
    }
    if (std::isinf(best)) return std::nullopt;
    return best;
}

}  // namespace

std::size_t SynthScene::count_role(SplatRole role) const {
    return std::size_t(std::count(roles.begin(), roles.end(), role));
}

std::vector<Eigen::Vector3d> SynthScene::surface_positions(int label) const {
    std::vector<Eigen::Vector3d> out;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (roles[i] == SplatRole::Surface && (label < 0 || label_index[i] == label))
            out.push_back(cloud[i].centre());
    return out;
}

SynthScene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SynthScene scene;

    scene.labels.push_back("background");
    for (const auto& prim : spec.primitives)
        if (std::find(scene.labels.begin(), scene.labels.end(), prim.label) == scene.labels.end())
            scene.labels.push_back(prim.label);

    const double spacing = spec.surfel_spacing;
    const double jitter = spec.jitter_fraction * spacing;
    const double iso_scale = 0.5 * spacing;

    // Surface splats, primitive by primitive, in sample order.
    std::vector<Surfel> surfels;
    std::vector<int> surfel_label;
    for (const auto& prim : spec.primitives) {
        std::vector<Surfel> local;
        switch (prim.shape) {
            case Primitive::Shape::Box: sample_box(prim, spacing, jitter, rng, local); break;
            case Primitive::Shape::Sphere: sample_sphere(prim, spacing, jitter, rng, local); break;
            case Primitive::Shape::Cylinder:
                sample_cylinder(prim, spacing, jitter, rng, local);
                break;
        }
        const int label = int(std::find(scene.labels.begin(), scene.labels.end(), prim.label) -
                              scene.labels.begin());
        for (const auto& s : local) {
            surfels.push_back(s);
            surfel_label.push_back(label);
        }
    }
    const std::size_t n_surface = surfels.size();
    for (std::size_t i = 0; i < n_surface; ++i) {
        scene.cloud.splats.push_back(
            make_splat(surfels[i].position, iso_scale, kSurfaceOpacity, surfel_label[i]));
        scene.roles.push_back(SplatRole::Surface);
        scene.label_index.push_back(surfel_label[i]);
    }

    Eigen::Vector3d lo = surfels.front().position, hi = lo;
    for (const auto& s : surfels) {
        lo = lo.cwiseMin(s.position);
        hi = hi.cwiseMax(s.position);
    }
    const Eigen::Vector3d bbox_center = 0.5 * (lo + hi);
    const double bbox_half_diag = 0.5 * (hi - lo).norm();

    // Ghosts: low-opacity splats hovering just off the surface, near enough
    // to stay eps-connected to it.
    const std::size_t n_ghost =
        std::size_t(std::lround(spec.corruption.ghost_fraction * double(n_surface)));
    for (std::size_t g = 0; g < n_ghost; ++g) {
        const std::size_t anchor = std::size_t(rng.uniform_int(n_surface));
        const double offset = rng.uniform(1.0, 4.0) * spacing;
        const Eigen::Vector3d pos = surfels[anchor].position + offset * surfels[anchor].normal;
        scene.cloud.splats.push_back(
            make_splat(pos, iso_scale, rng.uniform(0.01, 0.08), surfel_label[anchor]));
        scene.roles.push_back(SplatRole::Ghost);
        scene.label_index.push_back(surfel_label[anchor]);
    }

    // Floaters: tight detached clusters well beyond the pruning clearance.
    const std::size_t n_floater =
        std::size_t(std::lround(spec.corruption.floater_fraction * double(n_surface)));
    std::size_t placed = 0;
    while (placed < n_floater) {
        const std::size_t cluster =
            std::min(n_floater - placed, std::size_t(12 + rng.uniform_int(29)));
        Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
        while (dir.norm() < 1e-9) dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        dir.normalize();
        const Eigen::Vector3d center =
            bbox_center + dir * (bbox_half_diag + kFloaterClearance + rng.uniform(0.0, 0.25));
        for (std::size_t k = 0; k < cluster; ++k) {
            Eigen::Vector3d off(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                rng.uniform(-1.0, 1.0));
            off *= kFloaterClusterRadius / std::sqrt(3.0);
            scene.cloud.splats.push_back(make_splat(center + off, iso_scale, kSurfaceOpacity, 0));
            scene.roles.push_back(SplatRole::Floater);
            scene.label_index.push_back(0);
        }
        placed += cluster;
    }

    // Needles: one axis stretched 50x, high opacity, sitting on the surface.
    const std::size_t n_needle =
        std::size_t(std::lround(spec.corruption.needle_fraction * double(n_surface)));
    for (std::size_t k = 0; k < n_needle; ++k) {
        const std::size_t anchor = std::size_t(rng.uniform_int(n_surface));
        const Eigen::Vector3d pos = surfels[anchor].position +
                                    0.2 * spacing * rng.uniform(-1.0, 1.0) * surfels[anchor].normal;
        GaussianSplat s = make_splat(pos, iso_scale, kSurfaceOpacity, surfel_label[anchor]);
        const int axis = int(rng.uniform_int(3));
        s.log_scale[std::size_t(axis)] = float(std::log(iso_scale * 50.0));
        const Eigen::Quaterniond q = rng.unit_quaternion();
        s.rot = {float(q.w()), float(q.x()), float(q.y()), float(q.z())};
        scene.cloud.splats.push_back(s);
        scene.roles.push_back(SplatRole::Needle);
        scene.label_index.push_back(surfel_label[anchor]);
    }

    for (int k = 0; k < spec.camera_ring.count; ++k) scene.views.push_back(ring_view(spec, k));
    return scene;
}

Image8 render_gt_mask(const CameraView& view, const SceneSpec& spec, const std::string& label,
                      int dilation_px) {
    Image8 mask(view.width, view.height);
    const Eigen::Matrix3d r_inv = view.rotation.transpose();
    const Eigen::Vector3d origin = view.centre_world();
    for (int y = 0; y < view.height; ++y) {
        for (int x = 0; x < view.width; ++x) {
            const Eigen::Vector3d dir_cam((x + 0.5 - view.cx) / view.fx,
                                          (y + 0.5 - view.cy) / view.fy, 1.0);
            const Eigen::Vector3d dir = (r_inv * dir_cam).normalized();
            double best = std::numeric_limits<double>::infinity();
            const Primitive* winner = nullptr;
            for (const auto& prim : spec.primitives) {
                const auto t = ray_hit(prim, origin, dir);
                if (t && *t < best) {
                    best = *t;
                    winner = &prim;
                }
            }
            if (winner && winner->label == label) mask.at(x, y) = 255;
        }
    }
    return dilation_px > 0 ? dilate(mask, dilation_px) : mask;
}

TriMesh gt_mesh(const SceneSpec& spec, const std::string& label, int resolution) {
    if (resolution < 3) throw ArgumentError("gt_mesh: resolution must be >= 3");
    TriMesh mesh;
    bool found = false;
    const auto add_vertex = [&](const Primitive& prim, const Eigen::Vector3d& local) {
        mesh.vertices.push_back(prim.center + prim.rotation * local);
        return int(mesh.vertices.size()) - 1;
    };
    for (const auto& prim : spec.primitives) {
        if (prim.label != label) continue;
        found = true;
        if (prim.shape == Primitive::Shape::Box) {
            const Eigen::Vector3d h = 0.5 * prim.dimensions;
            int corner[8];
            for (int k = 0; k < 8; ++k)
                corner[k] = add_vertex(prim, {(k & 1) ? h.x() : -h.x(), (k & 2) ? h.y() : -h.y(),
                                              (k & 4) ? h.z() : -h.z()});
            // Two triangles per face, outward orientation.
            const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                     {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
            for (const auto& q : quads) {
                mesh.faces.push_back({corner[q[0]], corner[q[1]], corner[q[2]]});
                mesh.faces.push_back({corner[q[0]], corner[q[2]], corner[q[3]]});
            }
        } else if (prim.shape == Primitive::Shape::Sphere) {
            // UV sphere: resolution latitude bands, 2*resolution longitudes.
            const int nlat = resolution, nlon = 2 * resolution;
            const int top = add_vertex(prim, {0, 0, prim.radius});
            const int bottom = add_vertex(prim, {0, 0, -prim.radius});
            std::vector<int> ring_start(std::size_t(nlat) - 1);
            for (int i = 1; i < nlat; ++i) {
                const double theta = std::numbers::pi * i / nlat;
                ring_start[std::size_t(i) - 1] = int(mesh.vertices.size());
                for (int j = 0; j < nlon; ++j) {
                    const double phi = 2.0 * std::numbers::pi * j / nlon;
                    add_vertex(prim, prim.radius * Eigen::Vector3d(std::sin(theta) * std::cos(phi),
                                                                   std::sin(theta) * std::sin(phi),
                                                                   std::cos(theta)));
                }
            }
            for (int j = 0; j < nlon; ++j) {
                const int jn = (j + 1) % nlon;
                mesh.faces.push_back({top, ring_start[0] + j, ring_start[0] + jn});
                mesh.faces.push_back({bottom, ring_start[std::size_t(nlat) - 2] + jn,
                                      ring_start[std::size_t(nlat) - 2] + j});
            }
            for (int i = 0; i + 1 < nlat - 1; ++i) {
                for (int j = 0; j < nlon; ++j) {
                    const int jn = (j + 1) % nlon;
                    const int a = ring_start[std::size_t(i)] + j, b = ring_start[std::size_t(i)] + jn;
                    const int c = ring_start[std::size_t(i) + 1] + j,
                              d = ring_start[std::size_t(i) + 1] + jn;
                    mesh.faces.push_back({a, c, d});
                    mesh.faces.push_back({a, d, b});
                }
            }
        } else {
            const int n = 2 * resolution;
            const double hh = 0.5 * prim.height;
            const int top_c = add_vertex(prim, {0, 0, hh});
            const int bot_c = add_vertex(prim, {0, 0, -hh});
            const int ring0 = int(mesh.vertices.size());
            for (int j = 0; j < n; ++j) {
                const double phi = 2.0 * std::numbers::pi * j / n;
                add_vertex(prim, {prim.radius * std::cos(phi), prim.radius * std::sin(phi), hh});
            }
            const int ring1 = int(mesh.vertices.size());
            for (int j = 0; j < n; ++j) {
                const double phi = 2.0 * std::numbers::pi * j / n;
                add_vertex(prim, {prim.radius * std::cos(phi), prim.radius * std::sin(phi), -hh});
            }
            for (int j = 0; j < n; ++j) {
                const int jn = (j + 1) % n;
                mesh.faces.push_back({top_c, ring0 + j, ring0 + jn});
                mesh.faces.push_back({bot_c, ring1 + jn, ring1 + j});
                mesh.faces.push_back({ring0 + j, ring1 + j, ring1 + jn});
                mesh.faces.push_back({ring0 + j, ring1 + jn, ring0 + jn});
            }
        }
    }
    if (!found) throw ArgumentError("gt_mesh: no primitive carries label '" + label + "'");
    mesh.validate();
    if (is_closed(mesh) && signed_volume(mesh) < 0.0) flip_faces(mesh);
    return mesh;
}

SceneSpec load_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": invalid JSON (" + e.what() + ")");
    }
    SceneSpec spec;
    try {
        spec.seed = doc.value("seed", std::uint64_t(0));
        spec.surfel_spacing = doc.value("surfel_spacing", 0.004);
        spec.jitter_fraction = doc.value("jitter_fraction", 0.25);
        spec.mask_dilation_px = doc.value("mask_dilation_px", 0);
        if (doc.contains("corruption")) {
            const auto& c = doc["corruption"];
            spec.corruption.floater_fraction = c.value("floater_fraction", 0.0);
            spec.corruption.ghost_fraction = c.value("ghost_fraction", 0.0);
            spec.corruption.needle_fraction = c.value("needle_fraction", 0.0);
        }
        if (doc.contains("camera_ring")) {
            const auto& r = doc["camera_ring"];
            spec.camera_ring.count = r.value("count", 15);
            spec.camera_ring.radius = r.value("radius", 1.0);
            spec.camera_ring.height = r.value("height", 0.7);
            if (r.contains("look_at")) {
                const auto v = r["look_at"].get<std::vector<double>>();
                if (v.size() != 3) throw SchemaError(path + ": look_at must hold 3 floats");
                spec.camera_ring.look_at = {v[0], v[1], v[2]};
            }
            spec.camera_ring.width = r.value("width", 640);
            spec.camera_ring.height_px = r.value("height_px", 480);
            spec.camera_ring.fx = r.value("fx", 580.0);
            spec.camera_ring.fy = r.value("fy", 580.0);
        }
        for (const auto& jp : doc.at("primitives")) {
            Primitive p;
            const std::string shape = jp.at("shape").get<std::string>();
            if (shape == "box")
                p.shape = Primitive::Shape::Box;
            else if (shape == "sphere")
                p.shape = Primitive::Shape::Sphere;
            else if (shape == "cylinder")
                p.shape = Primitive::Shape::Cylinder;
            else
                throw SchemaError(path + ": unknown shape '" + shape + "'");
            p.label = jp.at("label").get<std::string>();
            const auto c = jp.at("center").get<std::vector<double>>();
            if (c.size() != 3) throw SchemaError(path + ": center must hold 3 floats");
            p.center = {c[0], c[1], c[2]};
            if (jp.contains("rotation")) {
                const auto q = jp["rotation"].get<std::vector<double>>();
                if (q.size() != 4) throw SchemaError(path + ": rotation must hold 4 floats (wxyz)");
                p.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
            }
            if (p.shape == Primitive::Shape::Box) {
                const auto d = jp.at("dimensions").get<std::vector<double>>();
                if (d.size() != 3) throw SchemaError(path + ": dimensions must hold 3 floats");
                p.dimensions = {d[0], d[1], d[2]};
            } else {
                p.radius = jp.at("radius").get<double>();
                if (p.shape == Primitive::Shape::Cylinder) p.height = jp.at("height").get<double>();
            }
            spec.primitives.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": malformed scene spec (" + e.what() + ")");
    }
    spec.validate();
    return spec;
}

void save_scene_spec(const SceneSpec& spec, const std::string& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["seed"] = spec.seed;
    doc["surfel_spacing"] = spec.surfel_spacing;
    doc["jitter_fraction"] = spec.jitter_fraction;
    doc["mask_dilation_px"] = spec.mask_dilation_px;
    doc["corruption"] = {{"floater_fraction", spec.corruption.floater_fraction},
                         {"ghost_fraction", spec.corruption.ghost_fraction},
                         {"needle_fraction", spec.corruption.needle_fraction}};
    doc["camera_ring"] = {
        {"count", spec.camera_ring.count},     {"radius", spec.camera_ring.radius},
        {"height", spec.camera_ring.height},   {"look_at",
                                                {spec.camera_ring.look_at.x(),
                                                 spec.camera_ring.look_at.y(),
                                                 spec.camera_ring.look_at.z()}},
        {"width", spec.camera_ring.width},     {"height_px", spec.camera_ring.height_px},
        {"fx", spec.camera_ring.fx},           {"fy", spec.camera_ring.fy}};
    json prims = json::array();
    for (const auto& p : spec.primitives) {
        json jp;
        jp["shape"] = p.shape == Primitive::Shape::Box
                          ? "box"
                          : (p.shape == Primitive::Shape::Sphere ? "sphere" : "cylinder");
        jp["label"] = p.label;
        jp["center"] = {p.center.x(), p.center.y(), p.center.z()};
        jp["rotation"] = {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()};
        if (p.shape == Primitive::Shape::Box) {
            jp["dimensions"] = {p.dimensions.x(), p.dimensions.y(), p.dimensions.z()};
        } else {
            jp["radius"] = p.radius;
            if (p.shape == Primitive::Shape::Cylinder) jp["height"] = p.height;
        }
        prims.push_back(std::move(jp));
    }
    doc["primitives"] = std::move(prims);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << doc.dump(2) << "\n";
}

void write_scene(const SceneSpec& spec, const std::string& out_dir) {
    const SynthScene scene = generate_scene(spec);
    const fs::path root(out_dir);
    fs::create_directories(root / "masks");
    fs::create_directories(root / "gt");

    save_ply(scene.cloud, (root / "splats.ply").string());
    save_cameras(scene.views, (root / "cameras.json").string());
    save_scene_spec(spec, (root / "scene_spec.json").string());

    std::vector<std::string> files{"splats.ply", "cameras.json", "scene_spec.json"};
    for (const auto& view : scene.views) {
        for (std::size_t l = 1; l < scene.labels.size(); ++l) {
            const Image8 mask =
                render_gt_mask(view, spec, scene.labels[l], spec.mask_dilation_px);
            const std::string name = "masks/" + view.view_id + "__" + scene.labels[l] + ".png";
            save_png(mask, (root / name).string());
            files.push_back(name);
        }
    }

    json tags;
    tags["schema_version"] = 1;
    tags["labels"] = scene.labels;
    json roles = json::array(), label_idx = json::array();
    for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
        roles.push_back(role_name(scene.roles[i]));
        label_idx.push_back(scene.label_index[i]);
    }
    tags["roles"] = std::move(roles);
    tags["label_index"] = std::move(label_idx);
    {
        std::ofstream out(root / "gt" / "tags.json", std::ios::trunc);
        if (!out) throw IoError((root / "gt" / "tags.json").string() + ": cannot open for writing");
        out << tags.dump() << "\n";
    }
    files.push_back("gt/tags.json");

    for (std::size_t l = 1; l < scene.labels.size(); ++l) {
        SplatCloud surface;
        for (std::size_t i = 0; i < scene.cloud.size(); ++i)
            if (scene.roles[i] == SplatRole::Surface && scene.label_index[i] == int(l))
                surface.splats.push_back(scene.cloud.splats[i]);
        const std::string ply_name = "gt/surface_" + scene.labels[l] + ".ply";
        save_ply(surface, (root / ply_name).string());
        files.push_back(ply_name);
        const std::string mesh_name = "gt/mesh_" + scene.labels[l] + ".obj";
        export_mesh(gt_mesh(spec, scene.labels[l]), (root / mesh_name).string(), MeshFormat::Obj);
        files.push_back(mesh_name);
    }

    json manifest;
    manifest["schema_version"] = 1;
    manifest["generator"] = "mt19937_64/u53/box-muller";
    manifest["seed"] = spec.seed;
    manifest["labels"] = scene.labels;
    manifest["splat_count"] = scene.cloud.size();
    manifest["counts"] = {{"surface", scene.count_role(SplatRole::Surface)},
                          {"floater", scene.count_role(SplatRole::Floater)},
                          {"ghost", scene.count_role(SplatRole::Ghost)},
                          {"needle", scene.count_role(SplatRole::Needle)}};
    manifest["files"] = files;
    std::ofstream out(root / "scene_manifest.json", std::ios::trunc);
    if (!out)
        throw IoError((root / "scene_manifest.json").string() + ": cannot open for writing");
    out << manifest.dump(2) << "\n";
}

}  // namespace s2t
