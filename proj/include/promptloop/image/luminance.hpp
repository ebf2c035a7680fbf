#pragma once

#include "promptloop/image/image_buffer.hpp"

namespace promptloop {

inline constexpr double luma_r = 0.299;
inline constexpr double luma_g = 0.587;
inline constexpr double luma_b = 0.114;

/// BT.601 luma for RGB input; gray input passes through. Byte range scales by 255.
inline gray_image to_luminance(const image_buffer& img, luma_range range = luma_range::unit) {
    const double scale = range == luma_range::byte ? 255.0 : 1.0;
    gray_image out(img.width(), img.height(), range);
    const auto s = img.samples();
    if (img.channels() == 1) {
        for (std::size_t i = 0; i < out.samples.size(); ++i)
            out.samples[i] = s[i] * scale;
    } else {
        for (std::size_t i = 0; i < out.samples.size(); ++i)
            out.samples[i] = (luma_r * s[3 * i] + luma_g * s[3 * i + 1] + luma_b * s[3 * i + 2]) * scale;
    }
    return out;
}

} // namespace promptloop
