// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/camera.hpp"

#include "splat2twin/errors.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <fstream>

namespace s2t {

using nlohmann::json;

void CameraView::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw ValidationError("view '" + view_id + "': focal lengths must be positive");
    if (width <= 0 || height <= 0)
        throw ValidationError("view '" + view_id + "': image dimensions must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw ValidationError("view '" + view_id + "': principal point outside the image");
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
        throw ValidationError("view '" + view_id + "': rotation is not orthonormal");
    if (rotation.determinant() < 0.0)
        throw ValidationError("view '" + view_id + "': rotation determinant must be +1");
}

std::optional<PixelHit> project(const CameraView& view, const Eigen::Vector3d& point) {
    const Eigen::Vector3d cam = view.to_camera(point);
    if (!(cam.z() > 0.0)) return std::nullopt;
    const double u = view.fx * cam.x() / cam.z() + view.cx;
    const double v = view.fy * cam.y() / cam.z() + view.cy;
    if (u < 0.0 || u >= view.width || v < 0.0 || v >= view.height) return std::nullopt;
    return PixelHit{u, v, cam.z()};
}

std::vector<CameraView> load_cameras(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": invalid JSON (" + e.what() + ")");
    }
    const json* arr = &doc;
    if (doc.is_object() && doc.contains("views")) arr = &doc["views"];
    if (!arr->is_array()) throw SchemaError(path + ": expected an array of views");

    std::vector<CameraView> views;
    views.reserve(arr->size());
    for (const auto& jv : *arr) {
        try {
            CameraView v;
            v.view_id = jv.at("view_id").get<std::string>();
            v.fx = jv.at("fx").get<double>();
            v.fy = jv.at("fy").get<double>();
            v.cx = jv.at("cx").get<double>();
            v.cy = jv.at("cy").get<double>();
            v.width = jv.at("width").get<int>();
            v.height = jv.at("height").get<int>();
            const auto rot = jv.at("rotation").get<std::vector<double>>();
            const auto tr = jv.at("translation").get<std::vector<double>>();
            if (rot.size() != 9) throw SchemaError(path + ": rotation must hold 9 floats");
            if (tr.size() != 3) throw SchemaError(path + ": translation must hold 3 floats");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) v.rotation(r, c) = rot[3 * r + c];
            v.translation = {tr[0], tr[1], tr[2]};
            v.validate();
            views.push_back(std::move(v));
        } catch (const json::exception& e) {
            throw SchemaError(path + ": malformed view entry (" + e.what() + ")");
        }
    }
    return views;
}

void save_cameras(const std::vector<CameraView>& views, const std::string& path) {
    json arr = json::array();
    for (const auto& v : views) {
        std::vector<double> rot(9);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rot[3 * r + c] = v.rotation(r, c);
        arr.push_back({{"view_id", v.view_id},
                       {"fx", v.fx},
                       {"fy", v.fy},
                       {"cx", v.cx},
                       {"cy", v.cy},
                       {"width", v.width},
                       {"height", v.height},
                       {"rotation", rot},
                       {"translation", {v.translation.x(), v.translation.y(), v.translation.z()}}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << arr.dump(2) << "\n";
}

}  // namespace s2t
