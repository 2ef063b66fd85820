// SPDX-License-Identifier: Apache-2.0
//
// Core domain types for Gaussian splat clouds plus the closed-form
// per-primitive math (covariance, unnormalized density, anisotropy).

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace s2t {

/// One anisotropic Gaussian primitive as stored in a 3DGS PLY file.
///
/// All fields hold the raw float32 payload verbatim so a load/save round
/// trip is byte-identical; the accessors below apply the activation
/// conventions of the reference 3DGS implementation (exp on scales,
/// sigmoid on opacity, quaternion normalized on access).
struct GaussianSplat {
    std::array<float, 3> position{0.f, 0.f, 0.f};
    std::array<float, 3> log_scale{0.f, 0.f, 0.f};
    std::array<float, 4> rot{1.f, 0.f, 0.f, 0.f};  // (w, x, y, z) storage order
    float opacity_logit = 0.f;
    std::array<float, 3> colour_dc{0.f, 0.f, 0.f};
    std::vector<float> colour_rest;  // higher-order SH, carried opaquely

    Eigen::Vector3d centre() const {
        return {position[0], position[1], position[2]};
    }
    /// Activated scales exp(log_scale); strictly positive componentwise.
    Eigen::Vector3d scale() const {
        return {std::exp(double(log_scale[0])), std::exp(double(log_scale[1])),
                std::exp(double(log_scale[2]))};
    }
    /// Unit rotation; the stored quaternion is never trusted from disk.
    Eigen::Quaterniond rotation() const {
        Eigen::Quaterniond q(rot[0], rot[1], rot[2], rot[3]);
        return q.normalized();
    }
    /// sigmoid(opacity_logit), in (0,1) for finite logits.
    double opacity() const {
        return 1.0 / (1.0 + std::exp(-double(opacity_logit)));
    }
};

/// Ordered, immutable-by-convention sequence of splats. Operations never
/// mutate splats in place; filters return new clouds with order preserved.
struct SplatCloud {
    std::vector<GaussianSplat> splats;
    std::string source_path;  // provenance, may be empty

    std::size_t size() const { return splats.size(); }
    bool empty() const { return splats.empty(); }
    const GaussianSplat& operator[](std::size_t i) const { return splats[i]; }

    /// Finite axis-aligned bounds; (min, max). Undefined for empty clouds.
    std::pair<Eigen::Vector3d, Eigen::Vector3d> bounds() const;

    /// Positions as a flat array, in splat order.
    std::vector<Eigen::Vector3d> positions() const;
};

/// Parameters of the geometry cleaning stages (§ "clean" CLI stage).
struct CleanConfig {
    double alpha_min = 0.1;        // opacity gate
    double needle_ratio_max = 10.0;
    int sor_k = 16;
    double sor_std_ratio = 2.0;
    double dbscan_eps = 0.02;      // metres
    int dbscan_min_samples = 10;

    void validate() const;  // throws ArgumentError on out-of-range fields
};

/// Sigma = R * diag(s^2) * R^T with s = exp(log_scale). Symmetric positive
/// definite by construction (computed as L L^T with L = R diag(s)).
Eigen::Matrix3d covariance(const GaussianSplat& splat);

/// Unnormalized Gaussian density exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)), in (0,1].
/// Equals 1 exactly iff x == mu.
double density_at(const GaussianSplat& splat, const Eigen::Vector3d& x);

/// Gradient of log density: -Sigma^-1 (x - mu).
Eigen::Vector3d log_density_gradient(const GaussianSplat& splat, const Eigen::Vector3d& x);

/// max(s) / min(s) over activated scales; >= 1, and 1 iff isotropic.
double anisotropy_ratio(const GaussianSplat& splat);

}  // namespace s2t
