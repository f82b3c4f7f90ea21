#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fdg/camera.hpp"
#include "fdg/density.hpp"
#include "fdg/gaussian.hpp"
#include "fdg/image.hpp"
#include "fdg/losses.hpp"
#include "fdg/ply.hpp"
#include "fdg/rasterizer.hpp"
#include "fdg/rng.hpp"

namespace fdg {

struct Aabb {
    Vec3 lo;
    Vec3 hi;

    Vec3 extent() const { return hi - lo; }
    double diagonal() const { return extent().norm(); }
    bool degenerate() const {
        const Vec3 e = extent();
        return !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0);
    }
};

// Per-group learning rates (3DGS-style defaults). The position rate is scaled
// by scene extent and decays exponentially to position_final_ratio over the
// run. `uniform` switches every group to the single flat rate instead.
struct LearningRates {
    double position = 1.6e-4;
    double color = 2.5e-3;
    double opacity = 5e-2;
    double scale = 5e-3;
    double rotation = 1e-3;
    double position_final_ratio = 0.01;
    bool uniform = false;
    double uniform_rate = 1e-4;
};

struct TrainConfig {
    int iters = 2000;
    LearningRates lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.0;
    GdsConfig gds;
    LossWeights loss;
    std::uint64_t seed = 0;
    int log_interval = 1;
    int checkpoint_interval = 0;  // 0 disables checkpoints
    std::string checkpoint_dir;

    void validate() const {
        if (iters < 0) throw invalid_parameter("train config: iters must be >= 0");
        if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
            throw invalid_parameter("train config: betas must lie in (0, 1)");
        if (loss.lambda1 < 0.0 || loss.lambda2 < 0.0)
            throw invalid_parameter("train config: loss weights must be non-negative");
        gds.validate();
    }
};

struct MetricsRow {
    int iter = 0;
    double loss = 0.0;
    double psnr = 0.0;
    std::size_t n_gauss = 0;
    int n_split = 0;
    int n_clone = 0;
    int n_prune = 0;
    int n_gds_blocked = 0;
    double ms_elapsed = 0.0;
};

inline std::string metrics_csv_header() {
    return "iter,loss,psnr,n_gauss,n_split,n_clone,n_prune,n_gds_blocked,ms_elapsed";
}

inline std::string metrics_csv_row(const MetricsRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%zu,%d,%d,%d,%d,%.3f", r.iter, r.loss,
                  r.psnr, r.n_gauss, r.n_split, r.n_clone, r.n_prune, r.n_gds_blocked,
                  r.ms_elapsed);
    return buf;
}

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = metrics_csv_header() + "\n";
    for (const MetricsRow& r : rows) out += metrics_csv_row(r) + "\n";
    return out;
}

// Uniform random positions in `bounds`; isotropic scales from the mean
// nearest-neighbor spacing; opacity 0.1; gray color; identity rotations.
inline GaussianCloud init_cloud(std::size_t n, const Aabb& bounds, std::uint64_t seed) {
    if (n < 1) throw invalid_parameter("init_cloud: needs n >= 1");
    if (bounds.degenerate()) throw invalid_parameter("init_cloud: degenerate bounds");

    Rng rng(seed);
    std::vector<Vec3> positions(n);
    for (auto& p : positions)
        p = {rng.uniform(bounds.lo.x, bounds.hi.x), rng.uniform(bounds.lo.y, bounds.hi.y),
             rng.uniform(bounds.lo.z, bounds.hi.z)};

    double spacing;
    if (n >= 2) {
        std::vector<KdTree3::Entry> entries(n);
        for (std::size_t i = 0; i < n; ++i)
            entries[i] = {positions[i], i, static_cast<std::uint32_t>(i)};
        KdTree3 tree(std::move(entries));
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += std::sqrt(tree.nearest(positions[i], i).dist2);
        spacing = acc / static_cast<double>(n);
    } else {
        const Vec3 e = bounds.extent();
        spacing = std::cbrt(e.x * e.y * e.z);
    }
    const float log_s = static_cast<float>(std::log(std::max(spacing, 1e-12)));
    const float op = static_cast<float>(logit(0.1));
    const float gray = snap_color(0.5f);

    GaussianCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        Gaussian3D g;
        g.mu = {static_cast<float>(positions[i].x), static_cast<float>(positions[i].y),
                static_cast<float>(positions[i].z)};
        g.quat = {1.f, 0.f, 0.f, 0.f};
        g.log_scale = {log_s, log_s, log_s};
        g.logit_opacity = op;
        g.color = {gray, gray, gray};
        cloud.add(g);
    }
    return cloud;
}

struct View {
    Camera camera;
    Image target;
};

// Optimizer state: first/second moments per parameter, tracked through
// densification (fresh rows start from zero, survivors keep their moments).
struct TrainState {
    GaussianCloud cloud;
    std::vector<std::array<double, 3>> m_mu, v_mu;
    std::vector<std::array<double, 4>> m_quat, v_quat;
    std::vector<std::array<double, 3>> m_scale, v_scale;
    std::vector<double> m_opacity, v_opacity;
    std::vector<std::array<double, 3>> m_color, v_color;
    int iteration = 0;
    // separate streams: the view schedule stays identical across configs that
    // differ only in how many split samples they draw
    Rng rng_views{0};
    Rng rng_densify{0};

    explicit TrainState(GaussianCloud c, std::uint64_t seed)
        : cloud(std::move(c)), rng_views(seed),
          rng_densify(seed ^ 0x9e3779b97f4a7c15ULL) {
        resize(cloud.size());
    }

    void resize(std::size_t n) {
        m_mu.assign(n, {0, 0, 0});
        v_mu.assign(n, {0, 0, 0});
        m_quat.assign(n, {0, 0, 0, 0});
        v_quat.assign(n, {0, 0, 0, 0});
        m_scale.assign(n, {0, 0, 0});
        v_scale.assign(n, {0, 0, 0});
        m_opacity.assign(n, 0.0);
        v_opacity.assign(n, 0.0);
        m_color.assign(n, {0, 0, 0});
        v_color.assign(n, {0, 0, 0});
    }

    void remap(const std::vector<RowOrigin>& origins) {
        TrainState old = std::move(*this);
        *this = TrainState(std::move(old.cloud), 0);
        iteration = old.iteration;
        rng_views = old.rng_views;
        rng_densify = old.rng_densify;
        resize(cloud.size());
        for (std::size_t k = 0; k < origins.size(); ++k) {
            if (origins[k].fresh) continue;
            const std::size_t o = origins[k].old_row;
            m_mu[k] = old.m_mu[o];
            v_mu[k] = old.v_mu[o];
            m_quat[k] = old.m_quat[o];
            v_quat[k] = old.v_quat[o];
            m_scale[k] = old.m_scale[o];
            v_scale[k] = old.v_scale[o];
            m_opacity[k] = old.m_opacity[o];
            v_opacity[k] = old.v_opacity[o];
            m_color[k] = old.m_color[o];
            v_color[k] = old.v_color[o];
        }
    }
};

struct FitResult {
    GaussianCloud cloud;
    std::vector<MetricsRow> metrics;
};

namespace traindetail {

inline constexpr double kAdamEps = 1e-15;

inline double adam_step(double grad, double& m, double& v, double lr, double bias1,
                        double bias2, double beta1, double beta2) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    return lr * (m / bias1) / (std::sqrt(v / bias2) + kAdamEps);
}

}  // namespace traindetail

// Per-scene optimization: render -> loss -> analytic gradients -> decoupled
// weight-decay adaptive update -> scheduled GDS-gated densification.
// Renders every view per iteration, or one seeded-random view when there are
// more than eight. Deterministic for a fixed seed, config, and worker count.
inline FitResult fit(GaussianCloud initial, const std::vector<View>& views,
                     const TrainConfig& cfg) {
    cfg.validate();
    if (views.empty()) throw invalid_parameter("fit: needs at least one posed image");
    for (const View& v : views) {
        v.camera.validate();
        if (v.target.h != v.camera.height || v.target.w != v.camera.width)
            throw invalid_parameter("fit: target image does not match its camera resolution");
    }

    TrainState state(std::move(initial), cfg.seed);

    // scene extent scales the position learning rate
    double extent = 1.0;
    if (!state.cloud.empty()) {
        Vec3 lo = state.cloud.gaussians[0].position(), hi = lo;
        for (const auto& g : state.cloud.gaussians) {
            const Vec3 p = g.position();
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
        extent = std::max(0.5 * (hi - lo).norm(), 1e-6);
    }

    FitResult result;
    result.metrics.reserve(static_cast<std::size_t>(cfg.iters));
    const auto t_start = std::chrono::steady_clock::now();
    const bool all_views = views.size() <= 8;

    for (int iter = 1; iter <= cfg.iters; ++iter) {
        state.iteration = iter;

        std::vector<std::size_t> chosen;
        if (all_views) {
            chosen.resize(views.size());
            for (std::size_t i = 0; i < views.size(); ++i) chosen[i] = i;
        } else {
            chosen.push_back(state.rng_views.uniform_index(views.size()));
        }

        std::vector<Image> renders;
        std::vector<Image> targets;
        renders.reserve(chosen.size());
        targets.reserve(chosen.size());
        for (std::size_t v : chosen) {
            renders.push_back(render(state.cloud, views[v].camera).to_image());
            targets.push_back(views[v].target);
        }
        const TotalLoss loss = total_loss(renders, targets, cfg.loss);
        if (!std::isfinite(loss.value)) {
            const std::string dump = (cfg.checkpoint_dir.empty() ? std::string(".")
                                                                 : cfg.checkpoint_dir) +
                                     "/diverged_iter" + std::to_string(iter) + ".ply";
            save_ply(state.cloud, dump);
            throw numeric_error("fit: non-finite loss at iteration " + std::to_string(iter) +
                                "; cloud dumped to " + dump);
        }

        const std::size_t n = state.cloud.size();
        CloudGrads total(n);
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            const CloudGrads g =
                render_backward(state.cloud, views[chosen[k]].camera, loss.grad_renders[k]);
            for (std::size_t i = 0; i < n; ++i) {
                if (!g.visible[i]) continue;
                for (int a = 0; a < 3; ++a) {
                    total.mu[i][a] += g.mu[i][a];
                    total.log_scale[i][a] += g.log_scale[i][a];
                    total.color[i][a] += g.color[i][a];
                }
                for (int a = 0; a < 4; ++a) total.quat[i][a] += g.quat[i][a];
                total.logit_opacity[i] += g.logit_opacity[i];
                state.cloud.grad_accum[i].sum_norm += g.screen_grad_norm[i];
                state.cloud.grad_accum[i].count += 1.0;
            }
        }

        // adaptive moment update with decoupled weight decay
        const double bias1 = 1.0 - std::pow(cfg.beta1, iter);
        const double bias2 = 1.0 - std::pow(cfg.beta2, iter);
        double lr_pos, lr_col, lr_op, lr_sc, lr_rot;
        if (cfg.lr.uniform) {
            lr_pos = lr_col = lr_op = lr_sc = lr_rot = cfg.lr.uniform_rate;
        } else {
            const double decay = std::pow(cfg.lr.position_final_ratio,
                                          static_cast<double>(iter) / cfg.iters);
            lr_pos = cfg.lr.position * extent * decay;
            lr_col = cfg.lr.color;
            lr_op = cfg.lr.opacity;
            lr_sc = cfg.lr.scale;
            lr_rot = cfg.lr.rotation;
        }
        using traindetail::adam_step;
        for (std::size_t i = 0; i < n; ++i) {
            Gaussian3D& g = state.cloud.gaussians[i];
            for (int a = 0; a < 3; ++a) {
                double step = adam_step(total.mu[i][a], state.m_mu[i][a], state.v_mu[i][a],
                                        lr_pos, bias1, bias2, cfg.beta1, cfg.beta2);
                if (cfg.weight_decay > 0.0) step += lr_pos * cfg.weight_decay * g.mu[a];
                g.mu[a] = static_cast<float>(g.mu[a] - step);

                step = adam_step(total.log_scale[i][a], state.m_scale[i][a],
                                 state.v_scale[i][a], lr_sc, bias1, bias2, cfg.beta1, cfg.beta2);
                if (cfg.weight_decay > 0.0) step += lr_sc * cfg.weight_decay * g.log_scale[a];
                g.log_scale[a] = static_cast<float>(g.log_scale[a] - step);

                step = adam_step(total.color[i][a], state.m_color[i][a], state.v_color[i][a],
                                 lr_col, bias1, bias2, cfg.beta1, cfg.beta2);
                if (cfg.weight_decay > 0.0) step += lr_col * cfg.weight_decay * g.color[a];
                g.color[a] = snap_color(static_cast<float>(clamp01(g.color[a] - step)));
            }
            for (int a = 0; a < 4; ++a) {
                double step = adam_step(total.quat[i][a], state.m_quat[i][a], state.v_quat[i][a],
                                        lr_rot, bias1, bias2, cfg.beta1, cfg.beta2);
                if (cfg.weight_decay > 0.0) step += lr_rot * cfg.weight_decay * g.quat[a];
                g.quat[a] = static_cast<float>(g.quat[a] - step);
            }
            double step = adam_step(total.logit_opacity[i], state.m_opacity[i],
                                    state.v_opacity[i], lr_op, bias1, bias2, cfg.beta1, cfg.beta2);
            if (cfg.weight_decay > 0.0) step += lr_op * cfg.weight_decay * g.logit_opacity;
            g.logit_opacity = static_cast<float>(g.logit_opacity - step);
            g.normalize_quat();
        }

        MetricsRow row;
        row.iter = iter;
        row.loss = loss.value;
        row.psnr = loss.rec > 0.0 ? -10.0 * std::log10(loss.rec)
                                  : std::numeric_limits<double>::infinity();

        const int densify_until =
            cfg.gds.densify_until > 0 ? cfg.gds.densify_until : cfg.iters / 2;
        if (iter >= cfg.gds.warmup && iter <= densify_until &&
            iter % cfg.gds.densify_interval == 0) {
            std::vector<RowOrigin> origins;
            const DensifyReport report =
                densify_and_prune(state.cloud, cfg.gds, state.rng_densify, &origins);
            state.remap(origins);
            row.n_split = report.n_split;
            row.n_clone = report.n_clone;
            row.n_prune = report.n_prune;
            row.n_gds_blocked = report.n_gds_blocked;
        }
        row.n_gauss = state.cloud.size();
        row.ms_elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
        if (cfg.log_interval > 0 && (iter % cfg.log_interval == 0 || iter == cfg.iters))
            result.metrics.push_back(row);

        if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_dir.empty() &&
            iter % cfg.checkpoint_interval == 0)
            save_ply(state.cloud, cfg.checkpoint_dir + "/checkpoint_" + std::to_string(iter) +
                                      ".ply");
    }

    result.cloud = std::move(state.cloud);
    return result;
}

}  // namespace fdg
