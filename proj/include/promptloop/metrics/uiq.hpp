#pragma once

#include <algorithm>
#include <string>

#include "promptloop/image/image_buffer.hpp"
#include "promptloop/image/luminance.hpp"
#include "promptloop/image/window_stats.hpp"
#include "promptloop/metrics/metric_config.hpp"

namespace promptloop {

// Denominator factors below this are treated as exactly zero.
inline constexpr double uiq_degenerate_epsilon = 1e-20;

namespace detail {

inline bool windows_identical(const gray_image& x, const gray_image& y, std::size_t x0, std::size_t y0,
                              std::size_t window) {
    for (std::size_t j = 0; j < window; ++j)
        for (std::size_t i = 0; i < window; ++i)
            if (x(x0 + i, y0 + j) != y(x0 + i, y0 + j))
                return false;
    return true;
}

} // namespace detail

/// Universal quality index averaged over square sliding windows, stride 1.
///
/// A window whose denominator vanishes scores 1 when the two windows are identical
/// and 0 otherwise.
inline double uiq(const gray_image& x, const gray_image& y, const metric_config& cfg = {}) {
    require_same_shape(x, y);
    const std::size_t window = cfg.uiq_window;
    if (std::min(x.width, x.height) < window)
        throw size_error("image " + x.shape_string() + " is smaller than the " + std::to_string(window) +
                         "px UIQ window");
    const auto stats = sliding_window_stats(x, y, window, 1);
    const std::size_t nx = window_positions(x.width, window, 1);

    double total = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        const double spread = s.var_a + s.var_b;
        const double level = s.mean_a * s.mean_a + s.mean_b * s.mean_b;
        if (spread <= uiq_degenerate_epsilon || level <= uiq_degenerate_epsilon) {
            total += detail::windows_identical(x, y, i % nx, i / nx, window) ? 1.0 : 0.0;
            continue;
        }
        total += 4.0 * s.covar * s.mean_a * s.mean_b / (spread * level);
    }
    return total / static_cast<double>(stats.size());
}

inline double uiq(const image_buffer& ref, const image_buffer& cand, const metric_config& cfg = {}) {
    require_same_shape(ref, cand);
    return uiq(to_luminance(ref), to_luminance(cand), cfg);
}

} // namespace promptloop
