// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/mesh_io.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"

#include <Eigen/Geometry>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace s2t {

void export_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format) {
    mesh.validate();
    if (!mesh.faces.empty() && !is_closed(mesh))
        log::warn(path + ": exporting a non-closed mesh as-is");

    if (format == MeshFormat::Obj) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError(path + ": cannot open for writing");
        char line[128];
        for (const auto& v : mesh.vertices) {
            std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
            out << line;
        }
        for (const auto& [a, b, c] : mesh.faces)
            out << "f " << a + 1 << " " << b + 1 << " " << c + 1 << "\n";
        if (!out) throw IoError(path + ": write failed");
        return;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    char header[80] = {0};
    std::strncpy(header, "splat2twin binary STL", sizeof(header) - 1);
    out.write(header, sizeof header);
    const std::uint32_t count = std::uint32_t(mesh.face_count());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [a, b, c] : mesh.faces) {
        const Eigen::Vector3d& p0 = mesh.vertices[std::size_t(a)];
        const Eigen::Vector3d& p1 = mesh.vertices[std::size_t(b)];
        const Eigen::Vector3d& p2 = mesh.vertices[std::size_t(c)];
        Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
        const double len = n.norm();
        if (len > 0.0) n /= len;
        float record[12] = {float(n.x()),  float(n.y()),  float(n.z()),
                            float(p0.x()), float(p0.y()), float(p0.z()),
                            float(p1.x()), float(p1.y()), float(p1.z()),
                            float(p2.x()), float(p2.y()), float(p2.z())};
        out.write(reinterpret_cast<const char*>(record), sizeof record);
        const std::uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
    if (!out) throw IoError(path + ": write failed");
}

TriMesh import_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    TriMesh mesh;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Eigen::Vector3d v;
            if (!(ls >> v.x() >> v.y() >> v.z()))
                throw SchemaError(path + ":" + std::to_string(line_no) + ": malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ls >> token) {
                // Tolerate v/vt/vn references; only the vertex index is used.
                const long v = std::strtol(token.c_str(), nullptr, 10);
                if (v == 0)
                    throw SchemaError(path + ":" + std::to_string(line_no) + ": malformed face");
                idx.push_back(v > 0 ? int(v - 1) : int(long(mesh.vertices.size()) + v));
            }
            if (idx.size() < 3)
                throw SchemaError(path + ":" + std::to_string(line_no) +
                                  ": face needs at least 3 vertices");
            for (std::size_t k = 2; k < idx.size(); ++k)
                mesh.faces.push_back({idx[0], idx[k - 1], idx[k]});
        }
        // Other records (vn, vt, o, g, usemtl, ...) are ignored.
    }
    mesh.validate();
    return mesh;
}

}  // namespace s2t
