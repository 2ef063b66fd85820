// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/splat.hpp"

#include "splat2twin/errors.hpp"

#include <cmath>
#include <limits>

namespace s2t {

std::pair<Eigen::Vector3d, Eigen::Vector3d> SplatCloud::bounds() const {
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (const auto& s : splats) {
        const Eigen::Vector3d p = s.centre();
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

std::vector<Eigen::Vector3d> SplatCloud::positions() const {
    std::vector<Eigen::Vector3d> out;
    out.reserve(splats.size());
    for (const auto& s : splats) out.push_back(s.centre());
    return out;
}

void CleanConfig::validate() const {
    if (!(alpha_min >= 0.0 && alpha_min <= 1.0))
        throw ArgumentError("CleanConfig.alpha_min must lie in [0,1]");
    if (!(needle_ratio_max > 1.0))
        throw ArgumentError("CleanConfig.needle_ratio_max must exceed 1");
    if (sor_k < 1) throw ArgumentError("CleanConfig.sor_k must be positive");
    if (!(sor_std_ratio > 0.0)) throw ArgumentError("CleanConfig.sor_std_ratio must be positive");
    if (!(dbscan_eps > 0.0)) throw ArgumentError("CleanConfig.dbscan_eps must be positive");
    if (dbscan_min_samples < 1)
        throw ArgumentError("CleanConfig.dbscan_min_samples must be positive");
}

Eigen::Matrix3d covariance(const GaussianSplat& splat) {
    const Eigen::Matrix3d r = splat.rotation().toRotationMatrix();
    const Eigen::Matrix3d l = r * splat.scale().asDiagonal();
    return l * l.transpose();
}

namespace {
// Sigma^-1 = R diag(1/s^2) R^T, evaluated directly from the factorization
// so the result stays exact for extreme anisotropy.
Eigen::Matrix3d covariance_inverse(const GaussianSplat& splat) {
    const Eigen::Matrix3d r = splat.rotation().toRotationMatrix();
    const Eigen::Vector3d inv_s = splat.scale().cwiseInverse();
    const Eigen::Matrix3d li = inv_s.asDiagonal() * r.transpose();
    return li.transpose() * li;
}
}  // namespace

double density_at(const GaussianSplat& splat, const Eigen::Vector3d& x) {
    const Eigen::Vector3d d = x - splat.centre();
    if (d.isZero(0.0)) return 1.0;
    const double quad = d.dot(covariance_inverse(splat) * d);
    return std::exp(-0.5 * quad);
}

Eigen::Vector3d log_density_gradient(const GaussianSplat& splat, const Eigen::Vector3d& x) {
    return -(covariance_inverse(splat) * (x - splat.centre()));
}

double anisotropy_ratio(const GaussianSplat& splat) {
    const Eigen::Vector3d s = splat.scale();
    return s.maxCoeff() / s.minCoeff();
}

}  // namespace s2t
