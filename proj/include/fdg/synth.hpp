#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdg/camera.hpp"
#include "fdg/cameras_json.hpp"
#include "fdg/gaussian.hpp"
#include "fdg/image.hpp"
#include "fdg/ply.hpp"
#include "fdg/png_io.hpp"
#include "fdg/rasterizer.hpp"
#include "fdg/rng.hpp"
#include "fdg/trainer.hpp"

namespace fdg {

// Inward-facing orbit around the unit cube: the self-reconstruction fixture.
struct OrbitPreset {
    int views = 16;
    int image_size = 64;
    double radius = 2.5;
    int n_gaussians = 50;
    std::uint64_t seed = 42;
    Aabb bounds{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
};

// Camera looking at `target` from `eye`; x right, y down, z forward.
inline Camera look_at_camera(const Vec3& eye, const Vec3& target, int id, int size, double focal) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 world_up{0.0, 1.0, 0.0};
    Vec3 right = forward.cross(world_up);
    if (right.norm() < 1e-9) right = forward.cross(Vec3{1.0, 0.0, 0.0});
    right = right.normalized();
    const Vec3 down = forward.cross(right);

    Camera cam;
    cam.id = id;
    cam.width = cam.height = size;
    cam.fx = cam.fy = focal;
    cam.cx = cam.cy = size / 2.0;
    cam.rot = Mat3{{{right.x, right.y, right.z},
                    {down.x, down.y, down.z},
                    {forward.x, forward.y, forward.z}}};
    cam.trans = -(cam.rot * eye);
    cam.near = 0.01;
    cam.far = 100.0;
    return cam;
}

inline std::vector<Camera> orbit_cameras(const OrbitPreset& preset) {
    std::vector<Camera> cams;
    cams.reserve(static_cast<std::size_t>(preset.views));
    // ~53 degree field of view; the unit cube fills most of the frame at radius 2.5
    const double focal = static_cast<double>(preset.image_size);
    for (int k = 0; k < preset.views; ++k) {
        const double azimuth = 2.0 * 3.14159265358979323846 * k / preset.views;
        const double elevation = (k % 2 == 0 ? 0.30 : -0.18);  // radians, alternating rings
        const Vec3 eye{preset.radius * std::cos(elevation) * std::cos(azimuth),
                       preset.radius * std::sin(elevation),
                       preset.radius * std::cos(elevation) * std::sin(azimuth)};
        cams.push_back(look_at_camera(eye, Vec3{0, 0, 0}, k, preset.image_size, focal));
    }
    return cams;
}

// Ground-truth cloud: mid-opacity, mildly anisotropic Gaussians inside the
// cube with a margin. Colors are snapped to the PLY grid so fixtures
// round-trip bit-exactly.
inline GaussianCloud random_scene_cloud(const OrbitPreset& preset) {
    Rng rng(preset.seed);
    GaussianCloud cloud;
    const Vec3 margin = preset.bounds.extent() * 0.1;
    const Vec3 lo = preset.bounds.lo + margin;
    const Vec3 hi = preset.bounds.hi - margin;
    for (int i = 0; i < preset.n_gaussians; ++i) {
        Gaussian3D g;
        g.mu = {static_cast<float>(rng.uniform(lo.x, hi.x)),
                static_cast<float>(rng.uniform(lo.y, hi.y)),
                static_cast<float>(rng.uniform(lo.z, hi.z))};
        const Quat q = Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
        g.quat = {static_cast<float>(q.w), static_cast<float>(q.x), static_cast<float>(q.y),
                  static_cast<float>(q.z)};
        for (int a = 0; a < 3; ++a)
            g.log_scale[a] = static_cast<float>(std::log(rng.uniform(0.06, 0.15)));
        g.logit_opacity = static_cast<float>(logit(rng.uniform(0.55, 0.95)));
        for (int a = 0; a < 3; ++a)
            g.color[a] = snap_color(static_cast<float>(rng.uniform(0.1, 1.0)));
        cloud.add(g);
    }
    return cloud;
}

struct SceneManifest {
    std::vector<Camera> cameras;
    std::vector<std::string> image_paths;  // aligned with cameras
    Aabb bounds;
};

inline std::string view_image_name(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d.png", id);
    return buf;
}

// Writes cameras.json, gt.ply, manifest.json, and one PNG per view.
inline SceneManifest generate_orbit_fixture(const OrbitPreset& preset, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    SceneManifest manifest;
    manifest.cameras = orbit_cameras(preset);
    manifest.bounds = preset.bounds;

    const GaussianCloud cloud = random_scene_cloud(preset);
    save_ply(cloud, dir + "/gt.ply");
    save_cameras(dir + "/cameras.json", manifest.cameras);

    for (const Camera& cam : manifest.cameras) {
        const RenderBuffer buf = render(cloud, cam);
        const std::string name = view_image_name(cam.id);
        write_png_rgba(dir + "/" + name, cam.width, cam.height, buf.color, buf.alpha);
        manifest.image_paths.push_back(name);
    }

    nlohmann::json doc;
    doc["cameras"] = "cameras.json";
    doc["images"] = manifest.image_paths;
    doc["bounds"] = {{"lo", {preset.bounds.lo.x, preset.bounds.lo.y, preset.bounds.lo.z}},
                     {"hi", {preset.bounds.hi.x, preset.bounds.hi.y, preset.bounds.hi.z}}};
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw parse_error("generate_orbit_fixture: cannot write manifest.json");
    out << doc.dump(2) << "\n";
    return manifest;
}

// Loads a fixture directory: manifest.json when present, else cameras.json
// plus view_###.png files and default bounds. Validates that every image
// exists and matches its camera's resolution.
inline SceneManifest load_manifest(const std::string& dir) {
    namespace fs = std::filesystem;
    SceneManifest manifest;
    manifest.bounds = Aabb{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};

    const std::string manifest_path = dir + "/manifest.json";
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(std::string("load_manifest: invalid manifest.json: ") + e.what());
        }
        manifest.cameras = parse_cameras(dir + "/" + doc.at("cameras").get<std::string>());
        for (const auto& p : doc.at("images"))
            manifest.image_paths.push_back(p.get<std::string>());
        const auto& b = doc.at("bounds");
        manifest.bounds.lo = {b.at("lo").at(0).get<double>(), b.at("lo").at(1).get<double>(),
                              b.at("lo").at(2).get<double>()};
        manifest.bounds.hi = {b.at("hi").at(0).get<double>(), b.at("hi").at(1).get<double>(),
                              b.at("hi").at(2).get<double>()};
    } else {
        manifest.cameras = parse_cameras(dir + "/cameras.json");
        for (const Camera& cam : manifest.cameras)
            manifest.image_paths.push_back(view_image_name(cam.id));
    }

    if (manifest.image_paths.size() != manifest.cameras.size())
        throw parse_error("load_manifest: image count does not match camera count");
    for (std::size_t i = 0; i < manifest.cameras.size(); ++i) {
        const std::string full = dir + "/" + manifest.image_paths[i];
        if (!fs::exists(full)) throw parse_error("load_manifest: missing image '" + full + "'");
        const auto [w, h] = png_dimensions(full);
        if (w != manifest.cameras[i].width || h != manifest.cameras[i].height)
            throw parse_error("load_manifest: image '" + full + "' is " + std::to_string(w) +
                              "x" + std::to_string(h) + " but camera " +
                              std::to_string(manifest.cameras[i].id) + " expects " +
                              std::to_string(manifest.cameras[i].width) + "x" +
                              std::to_string(manifest.cameras[i].height));
    }
    return manifest;
}

// Posed training views from a fixture directory.
inline std::vector<View> load_views(const std::string& dir, const SceneManifest& manifest) {
    std::vector<View> views;
    views.reserve(manifest.cameras.size());
    for (std::size_t i = 0; i < manifest.cameras.size(); ++i)
        views.push_back({manifest.cameras[i], read_png(dir + "/" + manifest.image_paths[i])});
    return views;
}

}  // namespace fdg
