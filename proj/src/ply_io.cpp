// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/ply_io.hpp"

#include "splat2twin/errors.hpp"
#include "splat2twin/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace s2t {

namespace {

std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
        type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    return 0;
}

struct Property {
    std::string name;
    std::string type;
    std::size_t offset = 0;  // byte offset inside one vertex record
};

struct Header {
    std::size_t vertex_count = 0;
    std::size_t vertex_stride = 0;
    std::size_t payload_offset = 0;          // bytes before the vertex payload
    std::vector<Property> properties;        // vertex element only
    const Property* find(const std::string& name) const {
        for (const auto& p : properties)
            if (p.name == name) return &p;
        return nullptr;
    }
};

Header parse_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    if (line == "ply\r") line = "ply";
    if (line != "ply") throw SchemaError(path + ": not a PLY file");

    Header h;
    std::string current_element;
    bool seen_vertex = false;
    std::size_t stride = 0;
    bool format_ok = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "end_header") {
            if (!format_ok) throw SchemaError(path + ": missing format line");
            if (!seen_vertex) throw SchemaError(path + ": no vertex element");
            h.vertex_stride = stride;
            h.payload_offset = static_cast<std::size_t>(in.tellg());
            return h;
        }
        if (word == "comment" || word == "obj_info") continue;
        if (word == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "binary_little_endian")
                throw SchemaError(path + ": unsupported format '" + fmt +
                                  "' (binary_little_endian required)");
            format_ok = true;
            continue;
        }
        if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (seen_vertex && current_element == "vertex") {
                // Trailing elements after vertex are ignored; we never read
                // past the vertex payload.
            }
            if (name == "vertex") {
                if (seen_vertex) throw SchemaError(path + ": duplicate vertex element");
                seen_vertex = true;
                h.vertex_count = count;
            } else if (!seen_vertex && count > 0) {
                throw SchemaError(path + ": element '" + name +
                                  "' precedes vertex element; unsupported layout");
            }
            current_element = name;
            continue;
        }
        if (word == "property") {
            if (current_element != "vertex") continue;  // properties of ignored elements
            std::string type;
            ls >> type;
            if (type == "list")
                throw SchemaError(path + ": list property in vertex element is unsupported");
            std::string name;
            ls >> name;
            const std::size_t size = scalar_size(type);
            if (size == 0) throw SchemaError(path + ": unknown property type '" + type + "'");
            h.properties.push_back({name, type, stride});
            stride += size;
            continue;
        }
        throw SchemaError(path + ": unrecognized header line '" + line + "'");
    }
    throw SchemaError(path + ": header not terminated by end_header");
}

const Property& require_float(const Header& h, const std::string& path, const std::string& name) {
    const Property* p = h.find(name);
    if (!p) throw SchemaError(path + ": missing required property '" + name + "'");
    if (p->type != "float" && p->type != "float32")
        throw SchemaError(path + ": property '" + name + "' must be float32, got " + p->type);
    return *p;
}

inline float read_f32(const char* rec, std::size_t offset) {
    float v;
    std::memcpy(&v, rec + offset, sizeof(float));
    return v;
}

inline void write_f32(std::string& buf, float v) {
    char raw[sizeof(float)];
    std::memcpy(raw, &v, sizeof(float));
    buf.append(raw, sizeof(float));
}

}  // namespace

SplatCloud load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    const Header h = parse_header(in, path);

    const Property& px = require_float(h, path, "x");
    const Property& py = require_float(h, path, "y");
    const Property& pz = require_float(h, path, "z");
    const Property* pdc[3];
    for (int i = 0; i < 3; ++i) pdc[i] = &require_float(h, path, "f_dc_" + std::to_string(i));
    const Property& pop = require_float(h, path, "opacity");
    const Property* pscale[3];
    for (int i = 0; i < 3; ++i) pscale[i] = &require_float(h, path, "scale_" + std::to_string(i));
    const Property* prot[4];
    for (int i = 0; i < 4; ++i) prot[i] = &require_float(h, path, "rot_" + std::to_string(i));

    // Contiguous f_rest_0..m-1 block, optional.
    std::vector<const Property*> prest;
    for (int i = 0;; ++i) {
        const Property* p = h.find("f_rest_" + std::to_string(i));
        if (!p) break;
        if (p->type != "float" && p->type != "float32")
            throw SchemaError(path + ": property 'f_rest_" + std::to_string(i) +
                              "' must be float32");
        prest.push_back(p);
    }
    for (const auto& p : h.properties) {
        if (p.name.rfind("f_rest_", 0) == 0) {
            const int idx = std::atoi(p.name.c_str() + 7);
            if (idx >= static_cast<int>(prest.size()))
                throw SchemaError(path + ": non-contiguous f_rest block at '" + p.name + "'");
        }
    }

    // Unknown extras are tolerated (stride accounts for them) but flagged.
    for (const auto& p : h.properties) {
        const std::string& n = p.name;
        const bool known = n == "x" || n == "y" || n == "z" || n == "nx" || n == "ny" ||
                           n == "nz" || n == "opacity" || n.rfind("f_dc_", 0) == 0 ||
                           n.rfind("f_rest_", 0) == 0 || n.rfind("scale_", 0) == 0 ||
                           n.rfind("rot_", 0) == 0;
        if (!known) log::warn(path + ": skipping unknown property '" + n + "'");
    }

    SplatCloud cloud;
    cloud.source_path = path;
    cloud.splats.resize(h.vertex_count);

    std::vector<char> record(h.vertex_stride);
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
        in.read(record.data(), static_cast<std::streamsize>(h.vertex_stride));
        if (static_cast<std::size_t>(in.gcount()) != h.vertex_stride) {
            const std::size_t offset =
                h.payload_offset + i * h.vertex_stride + static_cast<std::size_t>(in.gcount());
            throw IoError(path + ": truncated payload at byte offset " + std::to_string(offset) +
                          " (vertex " + std::to_string(i) + " of " +
                          std::to_string(h.vertex_count) + ")");
        }
        GaussianSplat& s = cloud.splats[i];
        const char* rec = record.data();
        s.position = {read_f32(rec, px.offset), read_f32(rec, py.offset), read_f32(rec, pz.offset)};
        for (int k = 0; k < 3; ++k) s.colour_dc[k] = read_f32(rec, pdc[k]->offset);
        s.opacity_logit = read_f32(rec, pop.offset);
        for (int k = 0; k < 3; ++k) s.log_scale[k] = read_f32(rec, pscale[k]->offset);
        for (int k = 0; k < 4; ++k) s.rot[k] = read_f32(rec, prot[k]->offset);
        if (!prest.empty()) {
            s.colour_rest.resize(prest.size());
            for (std::size_t k = 0; k < prest.size(); ++k)
                s.colour_rest[k] = read_f32(rec, prest[k]->offset);
        }

        for (int k = 0; k < 3; ++k)
            if (!std::isfinite(s.position[k]))
                throw ValidationError(path + ": non-finite position at splat " +
                                      std::to_string(i));
        const bool finite_rest = std::isfinite(s.opacity_logit) &&
                                 std::isfinite(s.log_scale[0]) && std::isfinite(s.log_scale[1]) &&
                                 std::isfinite(s.log_scale[2]) && std::isfinite(s.rot[0]) &&
                                 std::isfinite(s.rot[1]) && std::isfinite(s.rot[2]) &&
                                 std::isfinite(s.rot[3]);
        if (!finite_rest)
            throw ValidationError(path + ": non-finite attribute at splat " + std::to_string(i));
        const double norm2 = double(s.rot[0]) * s.rot[0] + double(s.rot[1]) * s.rot[1] +
                             double(s.rot[2]) * s.rot[2] + double(s.rot[3]) * s.rot[3];
        if (norm2 <= 0.0)
            throw ValidationError(path + ": zero-norm quaternion at splat " + std::to_string(i));
    }
    return cloud;
}

void save_ply(const SplatCloud& cloud, const std::string& path) {
    const std::size_t rest_dim = cloud.empty() ? 0 : cloud.splats.front().colour_rest.size();
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.splats[i].colour_rest.size() != rest_dim)
            throw ArgumentError(path + ": ragged f_rest payload at splat " + std::to_string(i));

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "element vertex " << cloud.size() << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n";
    for (std::size_t i = 0; i < rest_dim; ++i) header << "property float f_rest_" << i << "\n";
    header << "property float opacity\n"
           << "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
           << "property float rot_0\nproperty float rot_1\nproperty float rot_2\n"
           << "property float rot_3\nend_header\n";

    std::string payload;
    payload.reserve(cloud.size() * (14 + rest_dim) * sizeof(float));
    for (const auto& s : cloud.splats) {
        for (int k = 0; k < 3; ++k) write_f32(payload, s.position[k]);
        for (int k = 0; k < 3; ++k) write_f32(payload, s.colour_dc[k]);
        for (float v : s.colour_rest) write_f32(payload, v);
        write_f32(payload, s.opacity_logit);
        for (int k = 0; k < 3; ++k) write_f32(payload, s.log_scale[k]);
        for (int k = 0; k < 4; ++k) write_f32(payload, s.rot[k]);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    const std::string head = header.str();
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError(path + ": write failed");
}

}  // namespace s2t
