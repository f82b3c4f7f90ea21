#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fdg/errors.hpp"
#include "fdg/math.hpp"

namespace fdg {

// One splat. Parameters are stored float32 (the serialization width); all
// derived math runs in double. Scales live in log space and opacity in logit
// space so unconstrained updates keep the activated values positive / in (0,1).
struct Gaussian3D {
    std::array<float, 3> mu = {0.f, 0.f, 0.f};
    std::array<float, 4> quat = {1.f, 0.f, 0.f, 0.f};  // w, x, y, z
    std::array<float, 3> log_scale = {0.f, 0.f, 0.f};
    float logit_opacity = 0.f;
    std::array<float, 3> color = {0.f, 0.f, 0.f};  // plain RGB in [0,1]

    Vec3 position() const { return {mu[0], mu[1], mu[2]}; }
    Quat rotation() const { return {quat[0], quat[1], quat[2], quat[3]}; }
    Vec3 scales() const {
        return {std::exp(static_cast<double>(log_scale[0])),
                std::exp(static_cast<double>(log_scale[1])),
                std::exp(static_cast<double>(log_scale[2]))};
    }
    double opacity() const { return sigmoid(logit_opacity); }
    Vec3 rgb() const { return {color[0], color[1], color[2]}; }

    void normalize_quat() {
        const Quat q = rotation().normalized();
        quat = {static_cast<float>(q.w), static_cast<float>(q.x),
                static_cast<float>(q.y), static_cast<float>(q.z)};
    }

    bool finite() const {
        for (float v : mu)
            if (!std::isfinite(v)) return false;
        for (float v : quat)
            if (!std::isfinite(v)) return false;
        for (float v : log_scale)
            if (!std::isfinite(v)) return false;
        for (float v : color)
            if (!std::isfinite(v)) return false;
        return std::isfinite(logit_opacity);
    }
};

// Symmetric positive semi-definite 3x3.
struct Covariance3 {
    Mat3 m;
};

// Accumulated screen-space positional gradient magnitude and the number of
// renders that observed the Gaussian, kept between densification events.
struct GradStat {
    double sum_norm = 0.0;
    double count = 0.0;
};

// Ordered splat collection. Every Gaussian carries a monotone insertion id
// that survives split/clone/prune, so logs can track individuals over time.
struct GaussianCloud {
    std::vector<Gaussian3D> gaussians;
    std::vector<GradStat> grad_accum;
    std::vector<std::uint64_t> ids;
    std::uint64_t next_id = 0;

    std::size_t size() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }

    void add(const Gaussian3D& g) {
        gaussians.push_back(g);
        grad_accum.push_back({});
        ids.push_back(next_id++);
    }

    void reset_grad_accum() {
        for (auto& s : grad_accum) s = {};
    }
};

// Sigma = R S S^T R^T with R the rotation of `quat` and S = diag(exp(log_scale)).
inline Covariance3 build_covariance(const Gaussian3D& g) {
    if (!g.finite()) throw invalid_parameter("build_covariance: non-finite Gaussian parameters");
    const Mat3 r = rotation_matrix(g.rotation().normalized());
    const Vec3 s = g.scales();
    Mat3 ms;  // R * S
    for (int i = 0; i < 3; ++i) {
        ms.m[i][0] = r.m[i][0] * s.x;
        ms.m[i][1] = r.m[i][1] * s.y;
        ms.m[i][2] = r.m[i][2] * s.z;
    }
    return {ms * ms.transpose()};
}

// Symmetric PSD square root via Jacobi eigendecomposition. Eigenvalues in
// [-1e-9, 0] clamp to zero; anything lower is rejected as non-PSD.
inline Covariance3 sqrt_spd(const Covariance3& cov) {
    const Mat3& m = cov.m;
    if (!m.finite()) throw invalid_parameter("sqrt_spd: non-finite matrix");
    const double scale = std::max(1.0, m.max_abs());
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::fabs(m.m[i][j] - m.m[j][i]) > 1e-8 * scale)
                throw invalid_parameter("sqrt_spd: matrix is not symmetric");

    const SymEigen3 eig = sym_eigen3(m);
    Vec3 roots;
    for (int i = 0; i < 3; ++i) {
        double lambda = eig.values[i];
        if (lambda < -1e-9) throw numeric_error("sqrt_spd: negative eigenvalue, input not PSD");
        if (lambda < 0.0) lambda = 0.0;
        roots[i] = std::sqrt(lambda);
    }
    const Mat3& v = eig.vectors;
    Mat3 b;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            b.m[i][j] = v.m[i][0] * roots[0] * v.m[j][0] + v.m[i][1] * roots[1] * v.m[j][1] +
                        v.m[i][2] * roots[2] * v.m[j][2];
    // enforce exact symmetry against rounding
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double avg = 0.5 * (b.m[i][j] + b.m[j][i]);
            b.m[i][j] = avg;
            b.m[j][i] = avg;
        }
    return {b};
}

// Inverse of an SPD matrix through its eigendecomposition. Eigenvalues at or
// below `min_eigenvalue` raise numeric_error.
inline Mat3 inverse_spd(const Mat3& m, double min_eigenvalue = 1e-12) {
    const SymEigen3 eig = sym_eigen3(m);
    if (eig.values[0] <= min_eigenvalue)
        throw numeric_error("inverse_spd: matrix is singular (smallest eigenvalue too low)");
    const Mat3& v = eig.vectors;
    Mat3 inv;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            inv.m[i][j] = v.m[i][0] / eig.values[0] * v.m[j][0] +
                          v.m[i][1] / eig.values[1] * v.m[j][1] +
                          v.m[i][2] / eig.values[2] * v.m[j][2];
    return inv;
}

// tr(R S S^T R^T) = tr(S S^T): the trace only needs the scales.
inline double covariance_trace(const Gaussian3D& g) {
    return std::exp(2.0 * static_cast<double>(g.log_scale[0])) +
           std::exp(2.0 * static_cast<double>(g.log_scale[1])) +
           std::exp(2.0 * static_cast<double>(g.log_scale[2]));
}

}  // namespace fdg
