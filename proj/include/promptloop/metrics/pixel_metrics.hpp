#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"

namespace promptloop {

inline constexpr double infinite_db = std::numeric_limits<double>::infinity();

/// Mean squared error pooled jointly over pixels and channels.
inline double mse(const image_buffer& ref, const image_buffer& cand) {
    require_same_shape(ref, cand);
    const auto a = ref.samples();
    const auto b = cand.samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

inline double rmse(const image_buffer& ref, const image_buffer& cand) { return std::sqrt(mse(ref, cand)); }

inline double psnr_from_mse(double mse_value, double peak) {
    if (mse_value == 0.0)
        return infinite_db;
    return 10.0 * std::log10(peak * peak / mse_value);
}

/// +inf when the images are identical.
inline double psnr(const image_buffer& ref, const image_buffer& cand, double peak = 1.0) {
    if (!(peak > 0.0))
        throw precondition_error("psnr peak must be positive");
    return psnr_from_mse(mse(ref, cand), peak);
}

/// Signal-to-reconstruction-error ratio averaged over channels.
///
/// Channels with zero error are +inf and are left out of the mean; if every channel is
/// error-free the result is +inf. A zero-mean channel with nonzero error yields -inf.
inline double sre(const image_buffer& ref, const image_buffer& cand) {
    require_same_shape(ref, cand);
    const std::size_t channels = ref.channels();
    const std::size_t n = ref.pixel_count();
    const auto a = ref.samples();
    const auto b = cand.samples();

    std::vector<double> sum_ref(channels, 0.0), sum_err(channels, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double r = a[p * channels + c];
            const double d = r - b[p * channels + c];
            sum_ref[c] += r;
            sum_err[c] += d * d;
        }
    }

    double total = 0.0;
    std::size_t finite = 0;
    for (std::size_t c = 0; c < channels; ++c) {
        if (sum_err[c] == 0.0)
            continue;
        const double mean = sum_ref[c] / static_cast<double>(n);
        if (mean == 0.0)
            return -infinite_db;
        total += 10.0 * std::log10(mean * mean / (sum_err[c] / static_cast<double>(n)));
        ++finite;
    }
    return finite == 0 ? infinite_db : total / static_cast<double>(finite);
}

} // namespace promptloop
