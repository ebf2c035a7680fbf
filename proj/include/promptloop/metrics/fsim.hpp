#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"
#include "promptloop/image/luminance.hpp"
#include "promptloop/metrics/metric_config.hpp"
#include "promptloop/metrics/phase_congruency.hpp"

namespace promptloop {

inline constexpr std::size_t fsim_min_dimension = 32;

/// Pooling factor that brings the shorter side near 256 px.
inline std::size_t fsim_downsample_factor(std::size_t width, std::size_t height) {
    const double f = std::round(static_cast<double>(std::min(width, height)) / 256.0);
    return std::max<std::size_t>(1, static_cast<std::size_t>(f));
}

/// Non-overlapping factor x factor mean pooling; a trailing partial block is dropped.
inline gray_image mean_pool(const gray_image& img, std::size_t factor) {
    if (factor <= 1)
        return img;
    gray_image out(img.width / factor, img.height / factor, img.range);
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            double sum = 0.0;
            for (std::size_t j = 0; j < factor; ++j)
                for (std::size_t i = 0; i < factor; ++i)
                    sum += img(x * factor + i, y * factor + j);
            out(x, y) = sum * inv;
        }
    }
    return out;
}

/// Scharr gradient magnitude, zero padding at the border ("same"-size output).
inline gray_image scharr_gradient_magnitude(const gray_image& img) {
    const auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
        if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(img.width) || y >= static_cast<std::ptrdiff_t>(img.height))
            return 0.0;
        return img(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    };
    gray_image out(img.width, img.height, img.range);
    for (std::size_t uy = 0; uy < img.height; ++uy) {
        for (std::size_t ux = 0; ux < img.width; ++ux) {
            const auto x = static_cast<std::ptrdiff_t>(ux);
            const auto y = static_cast<std::ptrdiff_t>(uy);
            const double gx = (3.0 * (px(x + 1, y - 1) - px(x - 1, y - 1)) + 10.0 * (px(x + 1, y) - px(x - 1, y)) +
                               3.0 * (px(x + 1, y + 1) - px(x - 1, y + 1))) / 16.0;
            const double gy = (3.0 * (px(x - 1, y + 1) - px(x - 1, y - 1)) + 10.0 * (px(x, y + 1) - px(x, y - 1)) +
                               3.0 * (px(x + 1, y + 1) - px(x + 1, y - 1))) / 16.0;
            out(ux, uy) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

/// Intermediate maps of one FSIM evaluation, exposed for inspection and testing.
struct fsim_maps {
    gray_image luma_ref;
    gray_image luma_cand;
    gray_image pc_ref;
    gray_image pc_cand;
    gray_image grad_ref;
    gray_image grad_cand;
    double score = 0.0;
};

inline fsim_maps fsim_detailed(const image_buffer& ref, const image_buffer& cand, const metric_config& cfg = {}) {
    require_same_shape(ref, cand);
    const std::size_t factor = fsim_downsample_factor(ref.width(), ref.height());

    fsim_maps m;
    m.luma_ref = mean_pool(to_luminance(ref, luma_range::byte), factor);
    m.luma_cand = mean_pool(to_luminance(cand, luma_range::byte), factor);
    if (std::min(m.luma_ref.width, m.luma_ref.height) < fsim_min_dimension)
        throw size_error("FSIM needs at least " + std::to_string(fsim_min_dimension) +
                         " px on the short side after downsampling, got " + m.luma_ref.shape_string());

    const log_gabor_bank bank(m.luma_ref.width, m.luma_ref.height, phase_congruency_params::from(cfg));
    m.pc_ref = phase_congruency(m.luma_ref, bank);
    m.pc_cand = phase_congruency(m.luma_cand, bank);
    m.grad_ref = scharr_gradient_magnitude(m.luma_ref);
    m.grad_cand = scharr_gradient_magnitude(m.luma_cand);

    double weighted = 0.0;
    double weight = 0.0;
    for (std::size_t i = 0; i < m.pc_ref.samples.size(); ++i) {
        const double p1 = m.pc_ref.samples[i];
        const double p2 = m.pc_cand.samples[i];
        const double g1 = m.grad_ref.samples[i];
        const double g2 = m.grad_cand.samples[i];
        const double s_pc = (2.0 * p1 * p2 + cfg.fsim_t1) / (p1 * p1 + p2 * p2 + cfg.fsim_t1);
        const double s_g = (2.0 * g1 * g2 + cfg.fsim_t2) / (g1 * g1 + g2 * g2 + cfg.fsim_t2);
        const double pcm = std::max(p1, p2);
        weighted += s_pc * s_g * pcm;
        weight += pcm;
    }

    if (weight == 0.0) {
        if (ref == cand) {
            m.score = 1.0;
            return m;
        }
        throw metric_undefined_error("FSIM is undefined: neither image has any phase congruency");
    }
    m.score = weighted / weight;
    return m;
}

inline double fsim(const image_buffer& ref, const image_buffer& cand, const metric_config& cfg = {}) {
    return fsim_detailed(ref, cand, cfg).score;
}

} // namespace promptloop
