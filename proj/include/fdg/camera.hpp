#pragma once

#include <cstdint>

#include "fdg/errors.hpp"
#include "fdg/math.hpp"

namespace fdg {

// Pinhole camera: intrinsics in pixels, world-to-camera extrinsics.
// Convention: x right, y down, z forward (camera looks along +z).
struct Camera {
    int id = 0;
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat3 rot = Mat3::identity();  // world -> camera
    Vec3 trans;                   // world -> camera
    double near = 0.01;
    double far = 1000.0;

    Vec3 to_camera(const Vec3& world) const { return rot * world + trans; }

    // Camera center in world coordinates.
    Vec3 origin_world() const { return rot.transpose() * (-trans); }

    void validate() const {
        if (width <= 0 || height <= 0)
            throw invalid_parameter("camera: zero resolution");
        if (!(near > 0.0) || !(far > near))
            throw invalid_parameter("camera: requires 0 < near < far");
        if (!is_rotation(rot, 1e-8))
            throw invalid_parameter("camera: rotation is not orthonormal with det +1");
    }
};

// Intrinsics rescaled to the unit square, for resolution-independent epipolar math.
struct NormalizedIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;

    static NormalizedIntrinsics from_camera(const Camera& c) {
        return {c.fx / c.width, c.fy / c.height, c.cx / c.width, c.cy / c.height};
    }
};

}  // namespace fdg
