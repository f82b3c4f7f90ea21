#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdg/camera.hpp"
#include "fdg/errors.hpp"
#include "fdg/gaussian.hpp"

namespace fdg {

namespace camjson {

// Polar correction: R <- R (R^T R)^{-1/2}, the nearest rotation for mildly
// non-orthonormal inputs.
inline Mat3 reorthonormalize(const Mat3& r) {
    const Mat3 rtr = r.transpose() * r;
    const SymEigen3 eig = sym_eigen3(rtr);
    Mat3 inv_root;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            inv_root.m[i][j] = eig.vectors.m[i][0] / std::sqrt(eig.values[0]) * eig.vectors.m[j][0] +
                               eig.vectors.m[i][1] / std::sqrt(eig.values[1]) * eig.vectors.m[j][1] +
                               eig.vectors.m[i][2] / std::sqrt(eig.values[2]) * eig.vectors.m[j][2];
    return r * inv_root;
}

inline double orthonormal_deviation(const Mat3& r) {
    const Mat3 rtr = r.transpose() * r;
    double dev = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            dev = std::max(dev, std::fabs(rtr.m[i][j] - (i == j ? 1.0 : 0.0)));
    return dev;
}

}  // namespace camjson

// Parses a JSON array of camera records:
//   {id, width, height, fx, fy, cx, cy, rot: [9 row-major], trans: [3]}
// with optional near/far. Rotations are validated to 1e-6 orthonormality;
// deviations up to 1e-3 are polar-corrected, anything worse is rejected.
inline std::vector<Camera> parse_cameras(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("parse_cameras: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("parse_cameras: invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw parse_error("parse_cameras: top-level value must be an array");

    std::vector<Camera> cams;
    std::set<int> seen;
    for (const auto& rec : doc) {
        auto need = [&](const char* field) -> const nlohmann::json& {
            if (!rec.contains(field))
                throw parse_error(std::string("parse_cameras: camera record missing field '") +
                                  field + "'");
            return rec.at(field);
        };
        Camera c;
        c.id = need("id").get<int>();
        if (!seen.insert(c.id).second)
            throw parse_error("parse_cameras: duplicate camera id " + std::to_string(c.id));
        c.width = need("width").get<int>();
        c.height = need("height").get<int>();
        c.fx = need("fx").get<double>();
        c.fy = need("fy").get<double>();
        c.cx = need("cx").get<double>();
        c.cy = need("cy").get<double>();
        const auto& rot = need("rot");
        const auto& trans = need("trans");
        if (!rot.is_array() || rot.size() != 9)
            throw parse_error("parse_cameras: camera " + std::to_string(c.id) +
                              ": rot must hold 9 row-major floats");
        if (!trans.is_array() || trans.size() != 3)
            throw parse_error("parse_cameras: camera " + std::to_string(c.id) +
                              ": trans must hold 3 floats");
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                c.rot.m[i][j] = rot.at(static_cast<std::size_t>(i * 3 + j)).get<double>();
        c.trans = {trans.at(0).get<double>(), trans.at(1).get<double>(),
                   trans.at(2).get<double>()};
        if (rec.contains("near")) c.near = rec.at("near").get<double>();
        if (rec.contains("far")) c.far = rec.at("far").get<double>();

        const double dev = camjson::orthonormal_deviation(c.rot);
        if (dev > 1e-3)
            throw parse_error("parse_cameras: camera " + std::to_string(c.id) +
                              ": rotation is not orthonormal (deviation " + std::to_string(dev) +
                              ")");
        // anything short of the type invariant gets the polar correction
        if (dev > 1e-8) c.rot = camjson::reorthonormalize(c.rot);
        if (c.rot.det() < 0.0)
            throw parse_error("parse_cameras: camera " + std::to_string(c.id) +
                              ": rotation determinant is negative (reflection)");
        c.validate();
        cams.push_back(c);
    }
    return cams;
}

inline void save_cameras(const std::string& path, const std::vector<Camera>& cams) {
    nlohmann::json doc = nlohmann::json::array();
    for (const Camera& c : cams) {
        nlohmann::json rec;
        rec["id"] = c.id;
        rec["width"] = c.width;
        rec["height"] = c.height;
        rec["fx"] = c.fx;
        rec["fy"] = c.fy;
        rec["cx"] = c.cx;
        rec["cy"] = c.cy;
        nlohmann::json rot = nlohmann::json::array();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) rot.push_back(c.rot.m[i][j]);
        rec["rot"] = rot;
        rec["trans"] = {c.trans.x, c.trans.y, c.trans.z};
        rec["near"] = c.near;
        rec["far"] = c.far;
        doc.push_back(rec);
    }
    std::ofstream out(path);
    if (!out) throw parse_error("save_cameras: cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
}

}  // namespace fdg
