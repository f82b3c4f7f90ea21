#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "fdg/errors.hpp"
#include "fdg/matrix.hpp"
#include "fdg/rng.hpp"
#include "fdg/tensor_io.hpp"

namespace fdg {

// Projections for the orthogonal-plane decoder: a learnable query embedding u,
// self-attention projections over u, and the cross-attention triplet.
// Convention: token rows, projection y = x W^T.
struct PlaneDecoderWeights {
    std::size_t d = 0;
    Matrix u;                 // n_u x d learnable embedding
    Matrix self_q, self_k, self_v;  // d x d, self-attention over u
    Matrix wq, wk, wv;              // d x d, cross-attention

    static PlaneDecoderWeights random_init(std::size_t n_u, std::size_t d, std::uint64_t seed) {
        PlaneDecoderWeights w;
        w.d = d;
        Rng rng(seed);
        const double bound = 1.0 / std::sqrt(static_cast<double>(d));
        auto fill = [&](std::size_t r, std::size_t c) {
            Matrix m(r, c);
            for (double& v : m.data) v = rng.uniform(-bound, bound);
            return m;
        };
        w.u = fill(n_u, d);
        w.self_q = fill(d, d);
        w.self_k = fill(d, d);
        w.self_v = fill(d, d);
        w.wq = fill(d, d);
        w.wk = fill(d, d);
        w.wv = fill(d, d);
        return w;
    }

    // Seven consecutive tensor records: u, self_q, self_k, self_v, wq, wk, wv.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw parse_error("PlaneDecoderWeights::save: cannot open '" + path + "'");
        for (const Matrix* m : {&u, &self_q, &self_k, &self_v, &wq, &wk, &wv})
            write_matrix(out, *m);
    }

    static PlaneDecoderWeights load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw parse_error("PlaneDecoderWeights::load: cannot open '" + path + "'");
        PlaneDecoderWeights w;
        w.u = read_matrix(in);
        w.self_q = read_matrix(in);
        w.self_k = read_matrix(in);
        w.self_v = read_matrix(in);
        w.wq = read_matrix(in);
        w.wk = read_matrix(in);
        w.wv = read_matrix(in);
        w.d = w.wq.rows;
        return w;
    }
};

// H x W x C feature grids for the three planes plus the encoder latent.
struct PlaneFeatures {
    int h = 0, w = 0, c = 0;
    Matrix f_xy, f_yz, f_xz;  // (h*w) x c each
    Matrix latent;            // n_h x d
};

namespace planedetail {

inline Matrix project(const Matrix& x, const Matrix& w) { return matmul_bt(x, w); }

struct Attention {
    Matrix scores;  // pre-softmax
    Matrix probs;
    Matrix out;
};

inline Attention scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    Attention a;
    a.scores = matmul_bt(q, k);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols));
    for (double& s : a.scores.data) s *= inv_sqrt_d;
    a.probs = row_softmax(a.scores);
    a.out = matmul(a.probs, v);
    return a;
}

// Row-wise softmax Jacobian application: given dP, returns dS.
inline Matrix softmax_backward(const Matrix& probs, const Matrix& d_probs) {
    Matrix d_scores(probs.rows, probs.cols);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) dot += d_probs.at(r, c) * probs.at(r, c);
        for (std::size_t c = 0; c < probs.cols; ++c)
            d_scores.at(r, c) = probs.at(r, c) * (d_probs.at(r, c) - dot);
    }
    return d_scores;
}

}  // namespace planedetail

// SelfAttn(u) with single-head scaled dot-product attention over u's rows.
inline Matrix self_attn(const Matrix& u, const PlaneDecoderWeights& w) {
    return planedetail::scaled_dot_attention(planedetail::project(u, w.self_q),
                                             planedetail::project(u, w.self_k),
                                             planedetail::project(u, w.self_v))
        .out;
}

// CrossAttn(u, h) = SoftMax((W^Q SelfAttn(u)) (W^K h)^T / sqrt(d)) (W^V h).
inline Matrix cross_attn(const Matrix& u, const Matrix& latent, const PlaneDecoderWeights& w) {
    if (u.cols != w.d || latent.cols != w.d)
        throw invalid_parameter("cross_attn: embedding dimension mismatch");
    const Matrix su = self_attn(u, w);
    return planedetail::scaled_dot_attention(planedetail::project(su, w.wq),
                                             planedetail::project(latent, w.wk),
                                             planedetail::project(latent, w.wv))
        .out;
}

// Analytic gradient of sum(upstream .* cross_attn(u, h)) with respect to u,
// for fine-tuning the learnable embedding.
inline Matrix cross_attn_backward_u(const Matrix& u, const Matrix& latent,
                                    const PlaneDecoderWeights& w, const Matrix& upstream) {
    using planedetail::project;
    using planedetail::scaled_dot_attention;
    using planedetail::softmax_backward;

    // forward replay
    const Matrix a_u = project(u, w.self_q);
    const Matrix b_u = project(u, w.self_k);
    const Matrix c_u = project(u, w.self_v);
    const auto self_pass = scaled_dot_attention(a_u, b_u, c_u);
    const Matrix& su = self_pass.out;

    const Matrix q = project(su, w.wq);
    const Matrix k = project(latent, w.wk);
    const Matrix v = project(latent, w.wv);
    const auto cross_pass = scaled_dot_attention(q, k, v);

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w.d));

    // back through cross attention (k, v constant in u)
    const Matrix d_probs = matmul_bt(upstream, v);
    const Matrix d_scores = softmax_backward(cross_pass.probs, d_probs);
    Matrix d_q = matmul(d_scores, k);
    for (double& x : d_q.data) x *= inv_sqrt_d;
    const Matrix d_su = matmul(d_q, w.wq);

    // back through self attention; all of Q, K, V depend on u
    const Matrix d_probs_u = matmul_bt(d_su, c_u);
    const Matrix d_scores_u = softmax_backward(self_pass.probs, d_probs_u);
    Matrix d_a = matmul(d_scores_u, b_u);
    for (double& x : d_a.data) x *= inv_sqrt_d;
    Matrix d_b = matmul(d_scores_u.transpose(), a_u);
    for (double& x : d_b.data) x *= inv_sqrt_d;
    const Matrix d_c = matmul(self_pass.probs.transpose(), d_su);

    Matrix d_u = matmul(d_a, w.self_q);
    const Matrix d_u_k = matmul(d_b, w.self_k);
    const Matrix d_u_v = matmul(d_c, w.self_v);
    for (std::size_t i = 0; i < d_u.data.size(); ++i)
        d_u.data[i] += d_u_k.data[i] + d_u_v.data[i];
    return d_u;
}

// F = concat_channels(f_xy, f_yz + f_xz). Inputs are (h*w) x C grids with
// equal spatial extent; f_yz and f_xz must share a channel count.
inline Matrix combine_planes(const Matrix& f_xy, const Matrix& f_yz, const Matrix& f_xz) {
    if (f_xy.rows != f_yz.rows || f_xy.rows != f_xz.rows)
        throw invalid_parameter("combine_planes: spatial dimensions differ");
    if (f_yz.cols != f_xz.cols)
        throw invalid_parameter("combine_planes: yz/xz channel counts differ");
    Matrix out(f_xy.rows, f_xy.cols + f_yz.cols);
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < f_xy.cols; ++c) out.at(r, c) = f_xy.at(r, c);
        for (std::size_t c = 0; c < f_yz.cols; ++c)
            out.at(r, f_xy.cols + c) = f_yz.at(r, c) + f_xz.at(r, c);
    }
    return out;
}

}  // namespace fdg
