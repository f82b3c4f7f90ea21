#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fdg/gaussian.hpp"
#include "fdg/kdtree.hpp"
#include "fdg/rng.hpp"

namespace fdg {

// Two readings of the divergence metric: `wasserstein` uses Sigma1^{1/2} in the
// inner product (a true distance, zero for identical Gaussians); `literal`
// keeps Sigma1^{-1} exactly as printed in the source formula.
enum class GdsForm { wasserstein, literal };

inline GdsForm gds_form_from_string(const std::string& s) {
    if (s == "wasserstein") return GdsForm::wasserstein;
    if (s == "literal") return GdsForm::literal;
    throw invalid_parameter("unknown GDS form '" + s + "' (wasserstein|literal)");
}

struct GdsConfig {
    double threshold = 0.1;        // GDS gate; pairs below it are left alone
    GdsForm form = GdsForm::wasserstein;
    double grad_threshold = 2e-4;  // mean accumulated positional gradient
    int densify_interval = 100;
    int warmup = 500;
    int densify_until = 0;         // last eligible iteration; 0 = half the run
    double prune_opacity = 0.005;
    double split_factor = 1.6;

    void validate() const {
        if (threshold < 0.0) throw invalid_parameter("gds config: threshold must be >= 0");
        if (!(split_factor > 1.0))
            throw invalid_parameter("gds config: split_factor must exceed 1");
        if (densify_interval < 1)
            throw invalid_parameter("gds config: densify_interval must be >= 1");
    }
};

// Divergence of two Gaussians:
//   |mu1 - mu2|^2 + tr(Sigma1) + tr(Sigma2) - 2 tr(M^{1/2})
// with M = S1^{1/2} S2 S1^{1/2} (wasserstein) or S1^{-1} S2 S1^{-1} (literal).
// Traces use the shortcut tr(R S S^T R^T) = sum exp(2 log_scale).
inline double gds(const Gaussian3D& g1, const Gaussian3D& g2, GdsForm form = GdsForm::wasserstein) {
    const Vec3 dmu = g1.position() - g2.position();
    const double tr1 = covariance_trace(g1);
    const double tr2 = covariance_trace(g2);

    const Mat3 sigma2 = build_covariance(g2).m;
    Mat3 inner;
    if (form == GdsForm::wasserstein) {
        const Mat3 root1 = sqrt_spd(build_covariance(g1)).m;
        inner = root1 * sigma2 * root1;
    } else {
        const Mat3 inv1 = inverse_spd(build_covariance(g1).m, 1e-12);
        inner = inv1 * sigma2 * inv1;
    }
    // congruence keeps the product symmetric; clean up rounding before the root
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double avg = 0.5 * (inner.m[i][j] + inner.m[j][i]);
            inner.m[i][j] = avg;
            inner.m[j][i] = avg;
        }
    const double tr_cross = sqrt_spd({inner}).m.trace();
    return dmu.norm2() + tr1 + tr2 - 2.0 * tr_cross;
}

// Index over a cloud's positions; rebuilt after any mutation.
inline KdTree3 build_spatial_index(const GaussianCloud& cloud) {
    std::vector<KdTree3::Entry> entries;
    entries.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        entries.push_back({cloud.gaussians[i].position(), cloud.ids[i],
                           static_cast<std::uint32_t>(i)});
    return KdTree3(std::move(entries));
}

// GDS between Gaussian i and its exact Euclidean nearest neighbor
// (ties resolved toward the smaller id).
inline double nearest_gds(const GaussianCloud& cloud, const KdTree3& index, std::size_t i,
                          GdsForm form = GdsForm::wasserstein) {
    if (cloud.size() < 2) throw invalid_parameter("nearest_gds: cloud needs at least 2 Gaussians");
    const auto hit = index.nearest(cloud.gaussians[i].position(), cloud.ids[i]);
    if (!hit.found) throw numeric_error("nearest_gds: no neighbor found");
    return gds(cloud.gaussians[i], cloud.gaussians[hit.row], form);
}

struct DensifyReport {
    int n_split = 0;
    int n_clone = 0;
    int n_prune = 0;
    int n_gds_blocked = 0;
};

// Maps new cloud rows to their origin so optimizer state can follow along.
// Fresh rows (split children, clone copies) start with zeroed moments.
struct RowOrigin {
    std::size_t old_row = 0;
    bool fresh = false;
};

// One densification pass: split or clone Gaussians whose mean accumulated
// positional gradient exceeds grad_threshold AND whose nearest-neighbor GDS
// exceeds cfg.threshold; then prune near-transparent ones. Ids of survivors
// are preserved; grad statistics reset.
inline DensifyReport densify_and_prune(GaussianCloud& cloud, const GdsConfig& cfg, Rng& rng,
                                       std::vector<RowOrigin>* origins = nullptr) {
    cfg.validate();
    DensifyReport report;
    const std::size_t n = cloud.size();
    if (origins) origins->clear();
    if (n == 0) return report;

    // scene extent from the current positions
    Vec3 lo = cloud.gaussians[0].position(), hi = lo;
    for (const auto& g : cloud.gaussians) {
        const Vec3 p = g.position();
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    const double scene_diag = (hi - lo).norm();
    const double split_scale_limit = 0.01 * scene_diag;

    KdTree3 index;
    if (n >= 2) index = build_spatial_index(cloud);

    enum class Action : std::uint8_t { keep, split, clone };
    std::vector<Action> action(n, Action::keep);
    // threshold 0 turns the gate off entirely (plain ungated behavior),
    // so coincident Gaussians with gds == 0 are still never blocked
    const bool gate_enabled = cfg.threshold > 0.0 && n >= 2;
    for (std::size_t i = 0; i < n; ++i) {
        const GradStat& stat = cloud.grad_accum[i];
        const double mean_grad = stat.sum_norm / std::max(1.0, stat.count);
        if (mean_grad <= cfg.grad_threshold) continue;
        if (gate_enabled && nearest_gds(cloud, index, i, cfg.form) <= cfg.threshold) {
            ++report.n_gds_blocked;
            continue;
        }
        const Vec3 s = cloud.gaussians[i].scales();
        const double max_scale = std::max(s.x, std::max(s.y, s.z));
        action[i] = max_scale > split_scale_limit ? Action::split : Action::clone;
    }

    const double log_split = std::log(cfg.split_factor);
    std::vector<Gaussian3D> fresh;
    std::vector<std::size_t> fresh_origin;
    std::vector<Gaussian3D> kept;
    std::vector<std::uint64_t> kept_ids;
    std::vector<std::size_t> kept_origin;
    kept.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const Gaussian3D& parent = cloud.gaussians[i];
        switch (action[i]) {
            case Action::keep:
                kept.push_back(parent);
                kept_ids.push_back(cloud.ids[i]);
                kept_origin.push_back(i);
                break;
            case Action::clone: {
                kept.push_back(parent);
                kept_ids.push_back(cloud.ids[i]);
                kept_origin.push_back(i);
                fresh.push_back(parent);  // duplicate in place
                fresh_origin.push_back(i);
                ++report.n_clone;
                break;
            }
            case Action::split: {
                const Mat3 rot = rotation_matrix(parent.rotation().normalized());
                const Vec3 s = parent.scales();
                for (int child = 0; child < 2; ++child) {
                    Gaussian3D g = parent;
                    const Vec3 xi{rng.normal(), rng.normal(), rng.normal()};
                    const Vec3 local{s.x * xi.x, s.y * xi.y, s.z * xi.z};
                    const Vec3 p = parent.position() + rot * local;
                    g.mu = {static_cast<float>(p.x), static_cast<float>(p.y),
                            static_cast<float>(p.z)};
                    for (int a = 0; a < 3; ++a)
                        g.log_scale[a] = static_cast<float>(parent.log_scale[a] - log_split);
                    fresh.push_back(g);
                    fresh_origin.push_back(i);
                }
                ++report.n_split;
                break;
            }
        }
    }

    GaussianCloud next;
    next.next_id = cloud.next_id;
    auto admit = [&](const Gaussian3D& g, std::uint64_t id, std::size_t origin, bool is_fresh) {
        if (g.opacity() < cfg.prune_opacity) {
            ++report.n_prune;
            return;
        }
        next.gaussians.push_back(g);
        next.grad_accum.push_back({});
        next.ids.push_back(id);
        if (origins) origins->push_back({origin, is_fresh});
    };
    for (std::size_t k = 0; k < kept.size(); ++k)
        admit(kept[k], kept_ids[k], kept_origin[k], false);
    for (std::size_t k = 0; k < fresh.size(); ++k)
        admit(fresh[k], next.next_id++, fresh_origin[k], true);

    cloud = std::move(next);
    return report;
}

}  // namespace fdg
