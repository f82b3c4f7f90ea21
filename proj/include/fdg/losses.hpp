#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fdg/errors.hpp"
#include "fdg/image.hpp"

namespace fdg {

// Loss weights: lambda1 scales the SSIM term, lambda2 the perceptual hook.
// The perceptual term is a pluggable stub returning zero by default.
struct LossWeights {
    double lambda1 = 0.02;
    double lambda2 = 0.01;
};

// Mean over views of the per-view mean squared error (per pixel and channel).
inline double l_rec(const std::vector<Image>& renders, const std::vector<Image>& targets) {
    if (renders.empty() || renders.size() != targets.size())
        throw invalid_parameter("l_rec: requires equal non-zero view counts");
    double acc = 0.0;
    for (std::size_t s = 0; s < renders.size(); ++s) acc += mse(renders[s], targets[s]);
    return acc / static_cast<double>(renders.size());
}

namespace ssimdetail {

inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kC1 = 0.01 * 0.01;
inline constexpr double kC2 = 0.03 * 0.03;

inline const std::vector<double>& window_weights() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kWindow * kWindow);
        const int half = kWindow / 2;
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i)
            for (int j = 0; j < kWindow; ++j) {
                const double dy = i - half, dx = j - half;
                v[i * kWindow + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
                sum += v[i * kWindow + j];
            }
        for (double& x : v) x /= sum;
        return v;
    }();
    return w;
}

}  // namespace ssimdetail

// Mean local SSIM over valid 11x11 Gaussian windows (sigma 1.5), averaged over
// channels. When grad_a is non-null it receives d(ssim)/d(a) accumulated over
// all windows.
inline double ssim(const Image& a, const Image& b, Image* grad_a = nullptr) {
    if (!a.same_shape(b)) throw invalid_parameter("ssim: image dimensions differ");
    if (a.h < ssimdetail::kWindow || a.w < ssimdetail::kWindow)
        throw invalid_parameter("ssim: images smaller than the 11x11 window");

    const int win = ssimdetail::kWindow;
    const auto& wgt = ssimdetail::window_weights();
    const int oh = a.h - win + 1;
    const int ow = a.w - win + 1;
    const double n_terms = static_cast<double>(oh) * ow * 3;

    if (grad_a) {
        *grad_a = Image(a.h, a.w);
    }

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        const double w = wgt[i * win + j];
                        const double va = a.at(oy + i, ox + j, c);
                        const double vb = b.at(oy + i, ox + j, c);
                        mu_a += w * va;
                        mu_b += w * vb;
                        aa += w * va * va;
                        bb += w * vb * vb;
                        ab += w * va * vb;
                    }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov_ab = ab - mu_a * mu_b;

                const double n1 = 2.0 * mu_a * mu_b + ssimdetail::kC1;
                const double n2 = 2.0 * cov_ab + ssimdetail::kC2;
                const double d1 = mu_a * mu_a + mu_b * mu_b + ssimdetail::kC1;
                const double d2 = var_a + var_b + ssimdetail::kC2;
                const double s = (n1 * n2) / (d1 * d2);
                total += s;

                if (grad_a) {
                    // d s / d a_k via product and quotient rules
                    const double inv_d1d2 = 1.0 / (d1 * d2);
                    for (int i = 0; i < win; ++i)
                        for (int j = 0; j < win; ++j) {
                            const double w = wgt[i * win + j];
                            const double va = a.at(oy + i, ox + j, c);
                            const double vb = b.at(oy + i, ox + j, c);
                            const double dn1 = 2.0 * mu_b * w;
                            const double dn2 = 2.0 * w * (vb - mu_b);
                            const double dd1 = 2.0 * mu_a * w;
                            const double dd2 = 2.0 * w * (va - mu_a);
                            const double ds = (dn1 * n2 + n1 * dn2) * inv_d1d2 -
                                              s * (dd1 / d1 + dd2 / d2);
                            grad_a->at(oy + i, ox + j, c) += ds / n_terms;
                        }
                }
            }
        }
    }
    return total / n_terms;
}

// Hook for a learned perceptual metric; receives (renders, targets) and
// returns the loss value. Absent by default, contributing exactly zero.
using PerceptualHook = std::function<double(const std::vector<Image>&, const std::vector<Image>&)>;

struct TotalLoss {
    double value = 0.0;
    double rec = 0.0;
    double ssim_mean = 0.0;
    std::vector<Image> grad_renders;  // dL/drender per view
};

// L = L_rec + lambda1 (1 - mean ssim) + lambda2 * perceptual (0 when unset),
// with analytic gradient images for the rasterizer's backward pass.
inline TotalLoss total_loss(const std::vector<Image>& renders, const std::vector<Image>& targets,
                            const LossWeights& w, const PerceptualHook& perceptual = nullptr) {
    if (renders.empty() || renders.size() != targets.size())
        throw invalid_parameter("total_loss: requires equal non-zero view counts");
    if (w.lambda1 < 0.0 || w.lambda2 < 0.0)
        throw invalid_parameter("total_loss: loss weights must be non-negative");
    const double n_views = static_cast<double>(renders.size());

    TotalLoss out;
    out.grad_renders.reserve(renders.size());
    for (std::size_t s = 0; s < renders.size(); ++s) {
        if (!renders[s].same_shape(targets[s]))
            throw invalid_parameter("total_loss: view dimensions differ");
        out.rec += mse(renders[s], targets[s]);

        Image grad(renders[s].h, renders[s].w);
        const double rec_scale = 2.0 / (n_views * static_cast<double>(renders[s].px.size()));
        for (std::size_t i = 0; i < grad.px.size(); ++i)
            grad.px[i] = rec_scale * (renders[s].px[i] - targets[s].px[i]);

        if (w.lambda1 != 0.0) {
            Image ssim_grad;
            out.ssim_mean += ssim(renders[s], targets[s], &ssim_grad);
            const double scale = -w.lambda1 / n_views;
            for (std::size_t i = 0; i < grad.px.size(); ++i)
                grad.px[i] += scale * ssim_grad.px[i];
        } else {
            out.ssim_mean += ssim(renders[s], targets[s]);
        }
        out.grad_renders.push_back(std::move(grad));
    }
    out.rec /= n_views;
    out.ssim_mean /= n_views;

    double perceptual_term = 0.0;
    if (perceptual && w.lambda2 != 0.0) perceptual_term = perceptual(renders, targets);
    out.value = out.rec + w.lambda1 * (1.0 - out.ssim_mean) + w.lambda2 * perceptual_term;
    return out;
}

}  // namespace fdg
