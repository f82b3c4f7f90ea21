#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fdg/camera.hpp"
#include "fdg/errors.hpp"
#include "fdg/math.hpp"
#include "fdg/matrix.hpp"

namespace fdg {

// Steepness and band half-width of the epipolar weight sigmoid, in normalized
// image units (the values only make sense on the unit square).
inline constexpr double kEpipolarSteepness = 60.0;
inline constexpr double kEpipolarBand = 0.06;
inline constexpr double kEpipolarMinDepth = 1e-6;
inline constexpr double kEpipolarMinDirection = 1e-9;

// Rotation and translation mapping target-view camera coordinates to
// source-view camera coordinates.
struct RelativePose {
    Mat3 rot_ts = Mat3::identity();
    Vec3 trans_ts;

    // Composes world->camera extrinsics of the two views.
    static RelativePose between(const Camera& target, const Camera& source) {
        RelativePose p;
        p.rot_ts = source.rot * target.rot.transpose();
        p.trans_ts = source.trans - p.rot_ts * target.trans;
        return p;
    }
};

// h x w grid of d-dimensional feature vectors, rows flattened row-major.
struct FeatureMap {
    int h = 0;
    int w = 0;
    int d = 0;
    Matrix data;  // (h*w) x d

    FeatureMap() = default;
    FeatureMap(int height, int width, int dim)
        : h(height), w(width), d(dim),
          data(static_cast<std::size_t>(height) * width, static_cast<std::size_t>(dim)) {}
};

// (h*w) x (h*w) gate; rows index source positions, columns target positions.
struct EpipolarWeights {
    Matrix m;
    bool uniform_fallback = false;  // set when a degenerate pose forced all-ones
};

// Parametric epipolar line in the source view: p(c) = origin + c * direction.
struct EpipolarLine {
    Vec2 origin;   // projected target-camera origin o^{t->s}
    Vec2 through;  // projected unit-depth ray point p^{t->s}

    Vec2 direction() const { return through - origin; }
};

namespace epidetail {

inline Vec2 project_normalized(const Vec3& p, const NormalizedIntrinsics& k,
                               const char* what) {
    if (!(p.z > kEpipolarMinDepth))
        throw degenerate_epipolar_error(std::string("epipolar_line: ") + what +
                                        " is behind the source camera");
    return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

}  // namespace epidetail

// Epipolar line in the source view of a normalized target-view point: the
// point is lifted to its camera ray at unit depth, mapped through the relative
// pose and projected; the target camera origin is projected the same way.
// Pure-rotation poses (or points behind the source camera) are degenerate and
// raise degenerate_epipolar_error; callers should fall back to uniform weights.
inline EpipolarLine epipolar_line(const Vec2& p_t, const RelativePose& pose,
                                  const NormalizedIntrinsics& k_target,
                                  const NormalizedIntrinsics& k_source) {
    const Vec3 ray{(p_t.x - k_target.cx) / k_target.fx, (p_t.y - k_target.cy) / k_target.fy, 1.0};
    const Vec3 point_s = pose.rot_ts * ray + pose.trans_ts;
    const Vec3 origin_s = pose.trans_ts;  // rot * [0,0,0]^T + trans

    EpipolarLine line;
    line.origin = epidetail::project_normalized(origin_s, k_source, "camera origin");
    line.through = epidetail::project_normalized(point_s, k_source, "ray point");
    if (line.direction().norm() < kEpipolarMinDirection)
        throw degenerate_epipolar_error(
            "epipolar_line: degenerate direction (pure-rotation pose); use uniform weights");
    return line;
}

// Point-to-line distance d = |(p - o) x (q - o)| / |q - o| in normalized units.
inline double epipolar_distance(const Vec2& p_s, const EpipolarLine& line) {
    const Vec2 dir = line.direction();
    const double len = dir.norm();
    if (len < kEpipolarMinDirection)
        throw degenerate_epipolar_error("epipolar_distance: degenerate line");
    return std::fabs((p_s - line.origin).cross(dir)) / len;
}

inline double epipolar_weight(double distance) {
    return 1.0 - sigmoid(kEpipolarSteepness * (distance - kEpipolarBand));
}

// Weight of every source grid cell against the epipolar line of p_t.
// Cell centers are ((x+0.5)/w, (y+0.5)/h), row-major.
inline std::vector<double> weight_map(const Vec2& p_t, const RelativePose& pose,
                                      const NormalizedIntrinsics& k_target,
                                      const NormalizedIntrinsics& k_source, int h, int w) {
    const EpipolarLine line = epipolar_line(p_t, pose, k_target, k_source);
    std::vector<double> map(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec2 cell{(x + 0.5) / w, (y + 0.5) / h};
            map[static_cast<std::size_t>(y) * w + x] = epipolar_weight(epipolar_distance(cell, line));
        }
    return map;
}

// Stacks the weight maps of all target cells: entry (s, t) is the weight of
// source cell s against the epipolar line of target cell t. A degenerate pose
// yields the documented all-ones fallback with `uniform_fallback` set.
inline EpipolarWeights epipolar_weight_matrix(const RelativePose& pose,
                                              const NormalizedIntrinsics& k_target,
                                              const NormalizedIntrinsics& k_source,
                                              int h, int w) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    EpipolarWeights out;
    out.m = Matrix(n, n);
    for (int ty = 0; ty < h; ++ty) {
        for (int tx = 0; tx < w; ++tx) {
            const std::size_t t_idx = static_cast<std::size_t>(ty) * w + tx;
            const Vec2 p_t{(tx + 0.5) / w, (ty + 0.5) / h};
            std::vector<double> col;
            try {
                col = weight_map(p_t, pose, k_target, k_source, h, w);
            } catch (const degenerate_epipolar_error&) {
                out.uniform_fallback = true;
                for (std::size_t s = 0; s < n; ++s) out.m.at(s, t_idx) = 1.0;
                continue;
            }
            for (std::size_t s = 0; s < n; ++s) out.m.at(s, t_idx) = col[s];
        }
    }
    return out;
}

// Cross-view attention gated by the epipolar weights:
//   P = row_softmax(f_s f_t^T / sqrt(d));  G = normalize_rows(P .* W);  out = G f_t.
// Rows whose gated mass vanishes fall back to the ungated probabilities.
inline FeatureMap epipolar_attention(const FeatureMap& f_s, const FeatureMap& f_t,
                                     const EpipolarWeights& weights) {
    if (f_s.h != f_t.h || f_s.w != f_t.w || f_s.d != f_t.d)
        throw invalid_parameter("epipolar_attention: feature map dimensions differ");
    const std::size_t n = f_s.data.rows;
    if (weights.m.rows != n || weights.m.cols != n)
        throw invalid_parameter("epipolar_attention: weight matrix does not match the grid");

    Matrix scores = matmul_bt(f_s.data, f_t.data);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(f_s.d));
    for (double& v : scores.data) v *= inv_sqrt_d;
    const Matrix probs = row_softmax(scores);

    Matrix gated(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            gated.at(r, c) = probs.at(r, c) * weights.m.at(r, c);
            sum += gated.at(r, c);
        }
        if (sum < 1e-12) {
            for (std::size_t c = 0; c < n; ++c) gated.at(r, c) = probs.at(r, c);
        } else {
            for (std::size_t c = 0; c < n; ++c) gated.at(r, c) /= sum;
        }
    }

    FeatureMap out(f_s.h, f_s.w, f_s.d);
    out.data = matmul(gated, f_t.data);
    return out;
}

}  // namespace fdg
