#pragma once

#include <algorithm>
#include <string>

#include "promptloop/image/image_buffer.hpp"
#include "promptloop/image/luminance.hpp"
#include "promptloop/image/window_stats.hpp"
#include "promptloop/metrics/metric_config.hpp"

namespace promptloop {

/// Mean SSIM over every fully-contained Gaussian window of the luminance planes.
inline double ssim(const gray_image& x, const gray_image& y, const metric_config& cfg = {}) {
    require_same_shape(x, y);
    if (std::min(x.width, x.height) < cfg.ssim_window)
        throw size_error("image " + x.shape_string() + " is smaller than the " + std::to_string(cfg.ssim_window) +
                         "px SSIM window");
    const double c1 = (cfg.ssim_k1 * cfg.psnr_max) * (cfg.ssim_k1 * cfg.psnr_max);
    const double c2 = (cfg.ssim_k2 * cfg.psnr_max) * (cfg.ssim_k2 * cfg.psnr_max);
    const auto taps = gaussian_kernel(cfg.ssim_window, cfg.ssim_sigma);
    const auto stats = sliding_window_stats(x, y, cfg.ssim_window, 1, std::span<const double>(taps));

    double total = 0.0;
    for (const auto& s : stats) {
        const double num = (2.0 * s.mean_a * s.mean_b + c1) * (2.0 * s.covar + c2);
        const double den = (s.mean_a * s.mean_a + s.mean_b * s.mean_b + c1) * (s.var_a + s.var_b + c2);
        total += num / den;
    }
    return total / static_cast<double>(stats.size());
}

inline double ssim(const image_buffer& ref, const image_buffer& cand, const metric_config& cfg = {}) {
    require_same_shape(ref, cand);
    return ssim(to_luminance(ref), to_luminance(cand), cfg);
}

} // namespace promptloop
