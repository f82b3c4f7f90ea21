#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fdg/errors.hpp"

namespace fdg {

// Row-major H x W x 3 image of linear-light doubles.
struct Image {
    int h = 0;
    int w = 0;
    std::vector<double> px;

    Image() = default;
    Image(int height, int width) : h(height), w(width), px(static_cast<std::size_t>(height) * width * 3, 0.0) {}

    double& at(int y, int x, int c) { return px[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
    double at(int y, int x, int c) const { return px[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }

    bool same_shape(const Image& o) const { return h == o.h && w == o.w; }
};

inline double mse(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw invalid_parameter("mse: image dimensions differ");
    if (a.px.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.px.size(); ++i) {
        const double d = a.px[i] - b.px[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.px.size());
}

// Peak signal-to-noise ratio for unit dynamic range.
inline double psnr(const Image& a, const Image& b) {
    const double e = mse(a, b);
    if (e <= 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(e);
}

}  // namespace fdg
