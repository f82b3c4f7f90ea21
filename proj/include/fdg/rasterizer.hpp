#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fdg/camera.hpp"
#include "fdg/gaussian.hpp"
#include "fdg/image.hpp"
#include "fdg/parallel.hpp"

namespace fdg {

// Blending constants. The 3-sigma cutoff makes the Gaussian footprint compact,
// so bounded-box rasterization and the exhaustive reference agree exactly.
inline constexpr double kCovDiagFloor = 0.3;       // px^2 low-pass on cov2d
inline constexpr double kMahalanobisCut = 9.0;     // (3 sigma)^2
inline constexpr double kAlphaMax = 0.99;
inline constexpr double kTransmittanceMin = 1e-4;
inline constexpr double kDetMin = 1e-12;

struct Splat2D {
    Vec2 mean2d;
    Mat2 cov2d;
    double depth = 0.0;
    Vec3 color;
    double opacity = 0.0;
    std::uint32_t source_id = 0;
};

struct RenderBuffer {
    int h = 0;
    int w = 0;
    std::vector<double> color;       // h*w*3
    std::vector<double> alpha;       // h*w accumulated opacity
    std::vector<int> contrib_count;  // h*w blended splats per pixel

    RenderBuffer() = default;
    RenderBuffer(int height, int width)
        : h(height), w(width),
          color(static_cast<std::size_t>(height) * width * 3, 0.0),
          alpha(static_cast<std::size_t>(height) * width, 0.0),
          contrib_count(static_cast<std::size_t>(height) * width, 0) {}

    Image to_image() const {
        Image img(h, w);
        img.px = color;
        return img;
    }
};

struct RenderStats {
    int projected = 0;
    int culled = 0;    // behind near/far or off screen
    int singular = 0;  // cov2d below the determinant floor, skipped
};

// Perspective projection of one Gaussian. Returns nothing when the center
// falls outside (near, far). cov2d is the top-left 2x2 of J W Sigma W^T J^T
// plus the diagonal low-pass floor.
inline std::optional<Splat2D> project(const Gaussian3D& g, const Camera& cam,
                                      std::uint32_t source_id = 0) {
    const Vec3 t = cam.to_camera(g.position());
    if (!(t.z > cam.near && t.z < cam.far)) return std::nullopt;

    const Mat3 sigma = build_covariance(g).m;
    const double inv_z = 1.0 / t.z;
    const double inv_z2 = inv_z * inv_z;
    // rows of the perspective Jacobian J (2x3)
    const Vec3 j0{cam.fx * inv_z, 0.0, -cam.fx * t.x * inv_z2};
    const Vec3 j1{0.0, cam.fy * inv_z, -cam.fy * t.y * inv_z2};
    // U = J W (2x3)
    const Mat3& w = cam.rot;
    Vec3 u0, u1;
    for (int c = 0; c < 3; ++c) {
        u0[c] = j0.x * w.m[0][c] + j0.y * w.m[1][c] + j0.z * w.m[2][c];
        u1[c] = j1.x * w.m[0][c] + j1.y * w.m[1][c] + j1.z * w.m[2][c];
    }
    const Vec3 su0 = sigma * u0;
    const Vec3 su1 = sigma * u1;

    Splat2D s;
    s.cov2d.m[0][0] = u0.dot(su0) + kCovDiagFloor;
    s.cov2d.m[0][1] = u0.dot(su1);
    s.cov2d.m[1][0] = s.cov2d.m[0][1];
    s.cov2d.m[1][1] = u1.dot(su1) + kCovDiagFloor;
    s.mean2d = {cam.fx * t.x * inv_z + cam.cx, cam.fy * t.y * inv_z + cam.cy};
    s.depth = t.z;
    s.color = g.rgb();
    s.opacity = g.opacity();
    s.source_id = source_id;
    return s;
}

// exp(-kMahalanobisCut / 2): subtracted so the falloff reaches zero exactly
// at the support edge instead of jumping, keeping gradients finite-difference
// clean while the bounded box still matches an exhaustive render bit-for-bit.
inline const double kGaussianTailOffset = std::exp(-0.5 * kMahalanobisCut);

// 2D Gaussian falloff with continuous compact 3-sigma support.
inline double gaussian_weight(const Vec2& d, const Mat2& inv_cov) {
    const double m = d.x * (inv_cov.m[0][0] * d.x + inv_cov.m[0][1] * d.y) +
                     d.y * (inv_cov.m[1][0] * d.x + inv_cov.m[1][1] * d.y);
    if (m >= kMahalanobisCut) return 0.0;
    return std::exp(-0.5 * m) - kGaussianTailOffset;
}

struct BlendInput {
    double weight = 0.0;   // Gaussian falloff g in [0,1]
    double opacity = 0.0;  // activated sigma
    Vec3 color;
};

// Front-to-back compositor. add() returns false once transmittance would
// drop below the floor; the offending splat is excluded, matching the
// backward pass conditioning.
struct BlendAccum {
    Vec3 rgb;
    double transmittance = 1.0;
    int contributions = 0;

    bool add(double weight, double opacity, const Vec3& color) {
        if (weight <= 0.0) return true;
        double alpha = opacity * weight;
        if (alpha > kAlphaMax) alpha = kAlphaMax;
        const double next_t = transmittance * (1.0 - alpha);
        if (next_t < kTransmittanceMin) return false;
        rgb += color * (alpha * transmittance);
        transmittance = next_t;
        ++contributions;
        return true;
    }
};

// C-hat = sum_i c_i a_i prod_{j<i} (1 - a_j) over depth-ordered inputs.
inline Vec3 blend_pixel(std::span<const BlendInput> splats) {
    BlendAccum acc;
    for (const BlendInput& s : splats)
        if (!acc.add(s.weight, s.opacity, s.color)) break;
    return acc.rgb;
}

namespace rasterdetail {

struct Prepared {
    Vec2 mean;
    Mat2 inv_cov;
    double depth = 0.0;
    Vec3 color;
    double opacity = 0.0;
    std::uint32_t source = 0;
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

// Projects every Gaussian, drops culled/singular splats, computes conservative
// pixel bounds, and sorts by (depth, source_id).
inline std::vector<Prepared> prepare(const GaussianCloud& cloud, const Camera& cam,
                                     RenderStats* stats) {
    std::vector<Prepared> out;
    out.reserve(cloud.size());
    RenderStats local;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto splat = project(cloud.gaussians[i], cam, static_cast<std::uint32_t>(i));
        if (!splat) {
            ++local.culled;
            continue;
        }
        const double det = splat->cov2d.det();
        if (det < kDetMin) {
            ++local.singular;
            continue;
        }
        Prepared p;
        const double inv_det = 1.0 / det;
        p.inv_cov.m[0][0] = splat->cov2d.m[1][1] * inv_det;
        p.inv_cov.m[0][1] = -splat->cov2d.m[0][1] * inv_det;
        p.inv_cov.m[1][0] = p.inv_cov.m[0][1];
        p.inv_cov.m[1][1] = splat->cov2d.m[0][0] * inv_det;
        p.mean = splat->mean2d;
        p.depth = splat->depth;
        p.color = splat->color;
        p.opacity = splat->opacity;
        p.source = splat->source_id;
        const double rx = 3.0 * std::sqrt(splat->cov2d.m[0][0]);
        const double ry = 3.0 * std::sqrt(splat->cov2d.m[1][1]);
        p.x0 = std::max(0, static_cast<int>(std::floor(p.mean.x - rx)) - 1);
        p.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(p.mean.x + rx)) + 1);
        p.y0 = std::max(0, static_cast<int>(std::floor(p.mean.y - ry)) - 1);
        p.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(p.mean.y + ry)) + 1);
        if (p.x0 > p.x1 || p.y0 > p.y1) {
            ++local.culled;
            continue;
        }
        ++local.projected;
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const Prepared& a, const Prepared& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source < b.source;
    });
    if (stats) *stats = local;
    return out;
}

// Per-pixel splat index lists in blend order, flattened (counts/offsets/fill).
struct PixelLists {
    std::vector<std::uint32_t> offsets;  // h*w+1
    std::vector<std::uint32_t> items;    // splat indices into the prepared array
};

inline PixelLists build_pixel_lists(const std::vector<Prepared>& splats, int w, int h) {
    PixelLists lists;
    const std::size_t n_pix = static_cast<std::size_t>(w) * h;
    std::vector<std::uint32_t> counts(n_pix, 0);
    for (const Prepared& p : splats)
        for (int y = p.y0; y <= p.y1; ++y)
            for (int x = p.x0; x <= p.x1; ++x) ++counts[static_cast<std::size_t>(y) * w + x];

    lists.offsets.resize(n_pix + 1, 0);
    for (std::size_t i = 0; i < n_pix; ++i) lists.offsets[i + 1] = lists.offsets[i] + counts[i];
    lists.items.resize(lists.offsets.back());

    std::vector<std::uint32_t> cursor(lists.offsets.begin(), lists.offsets.end() - 1);
    for (std::uint32_t s = 0; s < splats.size(); ++s) {
        const Prepared& p = splats[s];
        for (int y = p.y0; y <= p.y1; ++y)
            for (int x = p.x0; x <= p.x1; ++x)
                lists.items[cursor[static_cast<std::size_t>(y) * w + x]++] = s;
    }
    return lists;
}

}  // namespace rasterdetail

// Rasterizes an explicit splat list (testing entry point; render() wraps it).
// Splats need not be sorted; they are ordered by (depth, source_id) here.
inline RenderBuffer rasterize_splats(std::vector<Splat2D> splats, int width, int height,
                                     RenderStats* stats = nullptr) {
    std::vector<rasterdetail::Prepared> prepared;
    prepared.reserve(splats.size());
    RenderStats local;
    for (const Splat2D& s : splats) {
        const double det = s.cov2d.det();
        if (det < kDetMin) {
            ++local.singular;
            continue;
        }
        rasterdetail::Prepared p;
        const double inv_det = 1.0 / det;
        p.inv_cov.m[0][0] = s.cov2d.m[1][1] * inv_det;
        p.inv_cov.m[0][1] = -s.cov2d.m[0][1] * inv_det;
        p.inv_cov.m[1][0] = p.inv_cov.m[0][1];
        p.inv_cov.m[1][1] = s.cov2d.m[0][0] * inv_det;
        p.mean = s.mean2d;
        p.depth = s.depth;
        p.color = s.color;
        p.opacity = s.opacity;
        p.source = s.source_id;
        const double rx = 3.0 * std::sqrt(s.cov2d.m[0][0]);
        const double ry = 3.0 * std::sqrt(s.cov2d.m[1][1]);
        p.x0 = std::max(0, static_cast<int>(std::floor(p.mean.x - rx)) - 1);
        p.x1 = std::min(width - 1, static_cast<int>(std::ceil(p.mean.x + rx)) + 1);
        p.y0 = std::max(0, static_cast<int>(std::floor(p.mean.y - ry)) - 1);
        p.y1 = std::min(height - 1, static_cast<int>(std::ceil(p.mean.y + ry)) + 1);
        if (p.x0 > p.x1 || p.y0 > p.y1) {
            ++local.culled;
            continue;
        }
        ++local.projected;
        prepared.push_back(p);
    }
    std::sort(prepared.begin(), prepared.end(),
              [](const rasterdetail::Prepared& a, const rasterdetail::Prepared& b) {
                  if (a.depth != b.depth) return a.depth < b.depth;
                  return a.source < b.source;
              });
    if (stats) *stats = local;

    const auto lists = rasterdetail::build_pixel_lists(prepared, width, height);
    RenderBuffer buf(height, width);
    parallel_ranges(height, worker_count(), [&](int, int row0, int row1) {
        for (int y = row0; y < row1; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * width + x;
                BlendAccum acc;
                const Vec2 center{x + 0.5, y + 0.5};
                for (std::uint32_t k = lists.offsets[pix]; k < lists.offsets[pix + 1]; ++k) {
                    const rasterdetail::Prepared& p = prepared[lists.items[k]];
                    const double g = gaussian_weight(center - p.mean, p.inv_cov);
                    if (!acc.add(g, p.opacity, p.color)) break;
                }
                buf.color[pix * 3 + 0] = acc.rgb.x;
                buf.color[pix * 3 + 1] = acc.rgb.y;
                buf.color[pix * 3 + 2] = acc.rgb.z;
                buf.alpha[pix] = 1.0 - acc.transmittance;
                buf.contrib_count[pix] = acc.contributions;
            }
        }
    });
    return buf;
}

// Full forward render. Deterministic: global (depth, source_id) sort, compact
// splat support, and pixels computed independently of the worker layout.
inline RenderBuffer render(const GaussianCloud& cloud, const Camera& cam,
                           RenderStats* stats = nullptr) {
    cam.validate();
    const auto prepared = rasterdetail::prepare(cloud, cam, stats);
    const auto lists = rasterdetail::build_pixel_lists(prepared, cam.width, cam.height);

    RenderBuffer buf(cam.height, cam.width);
    parallel_ranges(cam.height, worker_count(), [&](int, int row0, int row1) {
        for (int y = row0; y < row1; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
                BlendAccum acc;
                const Vec2 center{x + 0.5, y + 0.5};
                for (std::uint32_t k = lists.offsets[pix]; k < lists.offsets[pix + 1]; ++k) {
                    const rasterdetail::Prepared& p = prepared[lists.items[k]];
                    const double g = gaussian_weight(center - p.mean, p.inv_cov);
                    if (!acc.add(g, p.opacity, p.color)) break;
                }
                buf.color[pix * 3 + 0] = acc.rgb.x;
                buf.color[pix * 3 + 1] = acc.rgb.y;
                buf.color[pix * 3 + 2] = acc.rgb.z;
                buf.alpha[pix] = 1.0 - acc.transmittance;
                buf.contrib_count[pix] = acc.contributions;
            }
        }
    });
    return buf;
}

// Analytic gradients of the rendered image with respect to every Gaussian
// parameter, plus per-Gaussian screen-space positional gradient magnitudes
// for densification statistics. The magnitudes are reported in half-NDC
// units (pixel gradient scaled by width/2, height/2), the 3DGS convention
// the default grad_threshold is calibrated against.
struct CloudGrads {
    std::vector<std::array<double, 3>> mu;
    std::vector<std::array<double, 4>> quat;
    std::vector<std::array<double, 3>> log_scale;
    std::vector<double> logit_opacity;
    std::vector<std::array<double, 3>> color;
    std::vector<double> screen_grad_norm;
    std::vector<std::uint8_t> visible;

    explicit CloudGrads(std::size_t n = 0)
        : mu(n, {0, 0, 0}), quat(n, {0, 0, 0, 0}), log_scale(n, {0, 0, 0}),
          logit_opacity(n, 0.0), color(n, {0, 0, 0}), screen_grad_norm(n, 0.0),
          visible(n, 0) {}
};

namespace rasterdetail {

// dR/dq entries of the unit-quaternion rotation, one matrix per component.
inline void rotation_quat_grads(const Quat& q, Mat3 dr[4]) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    dr[0] = Mat3{{{0, -z, y}, {z, 0, -x}, {-y, x, 0}}}.scaled(2.0);
    dr[1] = Mat3{{{0, y, z}, {y, -2 * x, -w}, {z, w, -2 * x}}}.scaled(2.0);
    dr[2] = Mat3{{{-2 * y, x, w}, {x, 0, z}, {-w, z, -2 * y}}}.scaled(2.0);
    dr[3] = Mat3{{{-2 * z, -w, x}, {w, -2 * z, y}, {x, y, 0}}}.scaled(2.0);
}

struct PixelGrad {
    double mean_x = 0, mean_y = 0;
    double cov00 = 0, cov01 = 0, cov11 = 0;  // full-matrix gradient, symmetric
    double color_r = 0, color_g = 0, color_b = 0;
    double sigma = 0;
};

}  // namespace rasterdetail

inline CloudGrads render_backward(const GaussianCloud& cloud, const Camera& cam,
                                  const Image& grad_image) {
    cam.validate();
    if (grad_image.h != cam.height || grad_image.w != cam.width)
        throw invalid_parameter("render_backward: gradient image dimensions mismatch camera");

    const auto prepared = rasterdetail::prepare(cloud, cam, nullptr);
    const auto lists = rasterdetail::build_pixel_lists(prepared, cam.width, cam.height);
    const std::size_t n_splats = prepared.size();

    const int workers = std::max(1, std::min(worker_count(), cam.height));
    std::vector<std::vector<rasterdetail::PixelGrad>> partials(
        static_cast<std::size_t>(workers), std::vector<rasterdetail::PixelGrad>(n_splats));

    parallel_ranges(cam.height, workers, [&](int worker, int row0, int row1) {
        auto& acc = partials[static_cast<std::size_t>(worker)];
        struct Blended {
            std::uint32_t idx;
            double g, alpha, t_before;
        };
        std::vector<Blended> stack;
        stack.reserve(64);
        for (int y = row0; y < row1; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
                const Vec2 center{x + 0.5, y + 0.5};

                // forward replay with the same stop rule as render()
                stack.clear();
                double t = 1.0;
                for (std::uint32_t k = lists.offsets[pix]; k < lists.offsets[pix + 1]; ++k) {
                    const auto& p = prepared[lists.items[k]];
                    const double g = gaussian_weight(center - p.mean, p.inv_cov);
                    if (g <= 0.0) continue;
                    double alpha = p.opacity * g;
                    if (alpha > kAlphaMax) alpha = kAlphaMax;
                    const double next_t = t * (1.0 - alpha);
                    if (next_t < kTransmittanceMin) break;
                    stack.push_back({lists.items[k], g, alpha, t});
                    t = next_t;
                }
                if (stack.empty()) continue;

                const Vec3 grad_pix{grad_image.at(y, x, 0), grad_image.at(y, x, 1),
                                    grad_image.at(y, x, 2)};
                Vec3 suffix;  // sum over later splats of c_j a_j T_j
                for (std::size_t k = stack.size(); k-- > 0;) {
                    const Blended& b = stack[k];
                    const auto& p = prepared[b.idx];
                    auto& out = acc[b.idx];
                    const double at = b.alpha * b.t_before;
                    out.color_r += grad_pix.x * at;
                    out.color_g += grad_pix.y * at;
                    out.color_b += grad_pix.z * at;

                    const Vec3 dc_dalpha =
                        p.color * b.t_before - suffix * (1.0 / (1.0 - b.alpha));
                    const double dl_dalpha = grad_pix.dot(dc_dalpha);
                    suffix += p.color * at;

                    if (b.alpha >= kAlphaMax) continue;  // clamp zeroes the local gradient
                    out.sigma += b.g * dl_dalpha;
                    const double dl_dg = p.opacity * dl_dalpha;
                    // g = exp(-m/2) - offset, so dg/dm = -(g + offset)/2
                    const double dl_dm = -0.5 * (b.g + kGaussianTailOffset) * dl_dg;
                    const Vec2 d = center - p.mean;
                    const Vec2 ad = p.inv_cov * d;
                    out.mean_x -= 2.0 * dl_dm * ad.x;   // d m / d mean = -2 A d
                    out.mean_y -= 2.0 * dl_dm * ad.y;
                    out.cov00 -= dl_dm * ad.x * ad.x;   // dL/dCov = -dl_dm (A d)(A d)^T
                    out.cov01 -= dl_dm * ad.x * ad.y;
                    out.cov11 -= dl_dm * ad.y * ad.y;
                }
            }
        }
    });

    // reduce worker partials in fixed order
    std::vector<rasterdetail::PixelGrad> pix_grad(n_splats);
    for (const auto& part : partials)
        for (std::size_t s = 0; s < n_splats; ++s) {
            pix_grad[s].mean_x += part[s].mean_x;
            pix_grad[s].mean_y += part[s].mean_y;
            pix_grad[s].cov00 += part[s].cov00;
            pix_grad[s].cov01 += part[s].cov01;
            pix_grad[s].cov11 += part[s].cov11;
            pix_grad[s].color_r += part[s].color_r;
            pix_grad[s].color_g += part[s].color_g;
            pix_grad[s].color_b += part[s].color_b;
            pix_grad[s].sigma += part[s].sigma;
        }

    // chain pixel-space gradients to the 3D parameters per visible Gaussian
    CloudGrads grads(cloud.size());
    for (std::size_t s = 0; s < n_splats; ++s) {
        const auto& p = prepared[s];
        const auto& pg = pix_grad[s];
        const std::size_t r = p.source;
        grads.visible[r] = 1;
        const double gx = pg.mean_x * (0.5 * cam.width);
        const double gy = pg.mean_y * (0.5 * cam.height);
        grads.screen_grad_norm[r] = std::sqrt(gx * gx + gy * gy);

        const Gaussian3D& g = cloud.gaussians[r];
        const Vec3 t = cam.to_camera(g.position());
        const double inv_z = 1.0 / t.z;
        const double inv_z2 = inv_z * inv_z;
        const Vec3 j0{cam.fx * inv_z, 0.0, -cam.fx * t.x * inv_z2};
        const Vec3 j1{0.0, cam.fy * inv_z, -cam.fy * t.y * inv_z2};
        const Mat3& w = cam.rot;
        Vec3 u0, u1;
        for (int c = 0; c < 3; ++c) {
            u0[c] = j0.x * w.m[0][c] + j0.y * w.m[1][c] + j0.z * w.m[2][c];
            u1[c] = j1.x * w.m[0][c] + j1.y * w.m[1][c] + j1.z * w.m[2][c];
        }

        const Quat qn = g.rotation().normalized();
        const Mat3 rot = rotation_matrix(qn);
        const Vec3 scale = g.scales();
        const Mat3 sigma = build_covariance(g).m;

        // opacity
        const double sig = p.opacity;
        grads.logit_opacity[r] = pg.sigma * sig * (1.0 - sig);

        // color
        grads.color[r] = {pg.color_r, pg.color_g, pg.color_b};

        // mean2d -> t through the projection Jacobian
        Vec3 dt = j0 * pg.mean_x + j1 * pg.mean_y;

        // cov2d -> Sigma and U
        const double g2[2][2] = {{pg.cov00, pg.cov01}, {pg.cov01, pg.cov11}};
        Mat3 d_sigma;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double ui[2] = {u0[i], u1[i]};
                const double uj[2] = {u0[j], u1[j]};
                d_sigma.m[i][j] = ui[0] * g2[0][0] * uj[0] + ui[0] * g2[0][1] * uj[1] +
                                  ui[1] * g2[1][0] * uj[0] + ui[1] * g2[1][1] * uj[1];
            }
        // dU = 2 G2 U Sigma
        const Vec3 su0 = sigma * u0;
        const Vec3 su1 = sigma * u1;
        const Vec3 du0 = (su0 * g2[0][0] + su1 * g2[0][1]) * 2.0;
        const Vec3 du1 = (su0 * g2[1][0] + su1 * g2[1][1]) * 2.0;
        // dJ = dU W^T
        Vec3 dj0, dj1;
        for (int c = 0; c < 3; ++c) {
            dj0[c] = du0.x * w.m[c][0] + du0.y * w.m[c][1] + du0.z * w.m[c][2];
            dj1[c] = du1.x * w.m[c][0] + du1.y * w.m[c][1] + du1.z * w.m[c][2];
        }
        // J entries depend on t
        dt.x += dj0.z * (-cam.fx * inv_z2);
        dt.y += dj1.z * (-cam.fy * inv_z2);
        dt.z += dj0.x * (-cam.fx * inv_z2) + dj1.y * (-cam.fy * inv_z2) +
                dj0.z * (2.0 * cam.fx * t.x * inv_z2 * inv_z) +
                dj1.z * (2.0 * cam.fy * t.y * inv_z2 * inv_z);

        const Vec3 d_mu = w.transpose() * dt;
        grads.mu[r] = {d_mu.x, d_mu.y, d_mu.z};

        // Sigma = M M^T with M = R diag(scale)
        Mat3 m_rs;
        for (int i = 0; i < 3; ++i) {
            m_rs.m[i][0] = rot.m[i][0] * scale.x;
            m_rs.m[i][1] = rot.m[i][1] * scale.y;
            m_rs.m[i][2] = rot.m[i][2] * scale.z;
        }
        const Mat3 d_m = (d_sigma * m_rs).scaled(2.0);
        const double s_arr[3] = {scale.x, scale.y, scale.z};
        for (int j = 0; j < 3; ++j) {
            double ds = 0.0;
            for (int i = 0; i < 3; ++i) ds += d_m.m[i][j] * rot.m[i][j];
            grads.log_scale[r][j] = ds * s_arr[j];
        }
        Mat3 d_rot;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) d_rot.m[i][j] = d_m.m[i][j] * s_arr[j];

        Mat3 dr_dq[4];
        rasterdetail::rotation_quat_grads(qn, dr_dq);
        double dqn[4] = {0, 0, 0, 0};
        for (int k = 0; k < 4; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) dqn[k] += d_rot.m[i][j] * dr_dq[k].m[i][j];

        // through normalization: dq_raw = (dqn - qn (qn . dqn)) / |q_raw|
        const Quat q_raw = g.rotation();
        const double raw_norm = q_raw.norm();
        const double qv[4] = {qn.w, qn.x, qn.y, qn.z};
        double dot = 0.0;
        for (int k = 0; k < 4; ++k) dot += qv[k] * dqn[k];
        for (int k = 0; k < 4; ++k) grads.quat[r][k] = (dqn[k] - qv[k] * dot) / raw_norm;
    }
    return grads;
}

}  // namespace fdg
