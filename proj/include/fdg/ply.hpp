#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdg/errors.hpp"
#include "fdg/gaussian.hpp"

namespace fdg {

static_assert(std::endian::native == std::endian::little,
              "PLY writer assumes a little-endian host");

// DC term of the zeroth spherical harmonic; common 3DGS viewers expect color
// stored as (c - 0.5) / C0.
inline constexpr double kShC0 = 0.28209479177387814;

inline float encode_dc(float c) { return static_cast<float>((static_cast<double>(c) - 0.5) / kShC0); }
inline float decode_dc(float f) { return static_cast<float>(static_cast<double>(f) * kShC0 + 0.5); }

// Projects a color channel onto the grid that survives the PLY DC transform
// bit-exactly. decode(encode(.)) is idempotent, so one pass is enough.
inline float snap_color(float c) { return decode_dc(encode_dc(c)); }

namespace detail {

inline const char* kPlyProperties[17] = {
    "x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2",
    "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

}  // namespace detail

inline void save_ply(const GaussianCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("save_ply: cannot open '" + path + "' for writing");

    out << "ply\n"
        << "format binary_little_endian 1.0\n"
        << "element vertex " << cloud.size() << "\n";
    for (const char* name : detail::kPlyProperties) out << "property float " << name << "\n";
    out << "end_header\n";

    std::vector<float> row(17);
    for (const Gaussian3D& g : cloud.gaussians) {
        row[0] = g.mu[0];
        row[1] = g.mu[1];
        row[2] = g.mu[2];
        row[3] = row[4] = row[5] = 0.f;  // normals, unused
        row[6] = encode_dc(g.color[0]);
        row[7] = encode_dc(g.color[1]);
        row[8] = encode_dc(g.color[2]);
        row[9] = g.logit_opacity;
        row[10] = g.log_scale[0];
        row[11] = g.log_scale[1];
        row[12] = g.log_scale[2];
        row[13] = g.quat[0];
        row[14] = g.quat[1];
        row[15] = g.quat[2];
        row[16] = g.quat[3];
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw parse_error("save_ply: write failed for '" + path + "'");
}

inline GaussianCloud load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("load_ply: cannot open '" + path + "'");

    std::string line;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) throw parse_error("load_ply: truncated header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != "ply") throw parse_error("load_ply: missing 'ply' magic");
    if (next_line() != "format binary_little_endian 1.0")
        throw parse_error("load_ply: unsupported format line '" + line + "'");

    std::size_t vertex_count = 0;
    bool saw_element = false;
    std::size_t prop_index = 0;
    while (true) {
        next_line();
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment") continue;
        if (tok == "element") {
            std::string name;
            ls >> name >> vertex_count;
            if (name != "vertex")
                throw parse_error("load_ply: unexpected element '" + name + "'");
            saw_element = true;
            continue;
        }
        if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            if (prop_index >= 17)
                throw parse_error("load_ply: extra property '" + name + "'");
            if (type != "float")
                throw parse_error("load_ply: property '" + name + "' has type '" + type +
                                  "', expected float");
            if (name != detail::kPlyProperties[prop_index])
                throw parse_error("load_ply: property " + std::to_string(prop_index) +
                                  " is '" + name + "', expected '" +
                                  detail::kPlyProperties[prop_index] + "'");
            ++prop_index;
            continue;
        }
        throw parse_error("load_ply: unexpected header line '" + line + "'");
    }
    if (!saw_element) throw parse_error("load_ply: missing vertex element");
    if (prop_index != 17)
        throw parse_error("load_ply: missing property '" +
                          std::string(detail::kPlyProperties[prop_index]) + "'");

    GaussianCloud cloud;
    cloud.gaussians.reserve(vertex_count);
    std::vector<float> row(17);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in)
            throw parse_error("load_ply: truncated payload at vertex " + std::to_string(i) +
                              " of " + std::to_string(vertex_count));
        Gaussian3D g;
        g.mu = {row[0], row[1], row[2]};
        g.color = {decode_dc(row[6]), decode_dc(row[7]), decode_dc(row[8])};
        g.logit_opacity = row[9];
        g.log_scale = {row[10], row[11], row[12]};
        g.quat = {row[13], row[14], row[15], row[16]};
        cloud.add(g);
    }
    return cloud;
}

}  // namespace fdg
