// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace s2t {

/// Pinhole projection result: pixel coordinates plus camera-frame depth.
/// Pixel p samples the image cell [p, p+1); the lookup convention is
/// floor(u), floor(v).
struct PixelHit {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;  // camera-frame z, metres
};

/// Pinhole camera with world-to-camera rigid pose. Image x is right,
/// image y is down, camera looks along +z.
struct CameraView {
    std::string view_id;
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return rotation * world + translation;
    }
    /// Camera position in world coordinates.
    Eigen::Vector3d centre_world() const { return -(rotation.transpose() * translation); }

    /// Throws ValidationError when intrinsics are out of range or the
    /// rotation block is not orthonormal (1e-6) with determinant +1.
    void validate() const;
};

/// Projects a world point. Absent when the point is not strictly in front of
/// the camera (depth <= 0) or falls outside [0,width) x [0,height).
std::optional<PixelHit> project(const CameraView& view, const Eigen::Vector3d& point);

/// Canonical pose file: JSON array of views, each
/// {view_id, fx, fy, cx, cy, width, height, rotation: 9 row-major floats,
///  translation: 3 floats}. Every view is validated on load.
std::vector<CameraView> load_cameras(const std::string& path);
void save_cameras(const std::vector<CameraView>& views, const std::string& path);

}  // namespace s2t
