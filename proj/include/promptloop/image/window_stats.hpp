#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"

namespace promptloop {

struct window_stats {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    double covar = 0.0;
};

/// Normalized 1-D Gaussian taps; the outer product with itself is the usual 2-D window.
inline std::vector<double> gaussian_kernel(std::size_t window, double sigma) {
    if (window == 0 || !(sigma > 0.0))
        throw precondition_error("gaussian window needs a positive size and sigma");
    std::vector<double> taps(window);
    const double center = (static_cast<double>(window) - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        const double d = static_cast<double>(i) - center;
        taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        total += taps[i];
    }
    for (auto& t : taps)
        t /= total;
    return taps;
}

/// Number of fully-contained window placements along one axis.
inline std::size_t window_positions(std::size_t extent, std::size_t window, std::size_t stride) {
    return extent < window ? 0 : (extent - window) / stride + 1;
}

/// Local moments of every fully-contained window, in row-major placement order.
///
/// Without `taps` the moments are plain population moments; with `taps` (length
/// `window`) each pixel is weighted by taps[i] * taps[j], which must sum to 1.
inline std::vector<window_stats> sliding_window_stats(const gray_image& a, const gray_image& b, std::size_t window,
                                                      std::size_t stride = 1,
                                                      std::optional<std::span<const double>> taps = std::nullopt) {
    require_same_shape(a, b);
    if (window == 0 || stride == 0)
        throw precondition_error("window and stride must be positive");
    if (window > std::min(a.width, a.height))
        throw size_error("window " + std::to_string(window) + " exceeds image " + a.shape_string());
    if (taps && taps->size() != window)
        throw precondition_error("weight taps length must equal the window size");

    std::vector<double> uniform;
    std::span<const double> w;
    if (taps) {
        w = *taps;
    } else {
        uniform.assign(window, 1.0 / static_cast<double>(window));
        w = uniform;
    }

    const std::size_t width = a.width;
    const std::size_t nx = window_positions(a.width, window, stride);
    const std::size_t ny = window_positions(a.height, window, stride);

    // Moments are accumulated on planes shifted by their first sample: constant windows then
    // give exactly zero variance. Vertical pass into five column-filtered planes, then a
    // horizontal pass per placement.
    const double shift_a = a.samples.front();
    const double shift_b = b.samples.front();
    std::vector<double> va(nx == 0 ? 0 : ny * width), vb(va.size()), vaa(va.size()), vbb(va.size()), vab(va.size());
    for (std::size_t py = 0; py < ny; ++py) {
        const std::size_t y0 = py * stride;
        for (std::size_t x = 0; x < width; ++x) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t k = 0; k < window; ++k) {
                const double pa = a(x, y0 + k) - shift_a;
                const double pb = b(x, y0 + k) - shift_b;
                sa += w[k] * pa;
                sb += w[k] * pb;
                saa += w[k] * pa * pa;
                sbb += w[k] * pb * pb;
                sab += w[k] * pa * pb;
            }
            const std::size_t i = py * width + x;
            va[i] = sa;
            vb[i] = sb;
            vaa[i] = saa;
            vbb[i] = sbb;
            vab[i] = sab;
        }
    }

    std::vector<window_stats> out;
    out.reserve(nx * ny);
    for (std::size_t py = 0; py < ny; ++py) {
        for (std::size_t px = 0; px < nx; ++px) {
            const std::size_t base = py * width + px * stride;
            double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
            for (std::size_t k = 0; k < window; ++k) {
                ma += w[k] * va[base + k];
                mb += w[k] * vb[base + k];
                maa += w[k] * vaa[base + k];
                mbb += w[k] * vbb[base + k];
                mab += w[k] * vab[base + k];
            }
            window_stats s;
            s.mean_a = ma + shift_a;
            s.mean_b = mb + shift_b;
            s.var_a = std::max(0.0, maa - ma * ma);
            s.var_b = std::max(0.0, mbb - mb * mb);
            s.covar = mab - ma * mb;
            out.push_back(s);
        }
    }
    return out;
}

} // namespace promptloop
