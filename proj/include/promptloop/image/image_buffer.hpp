#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "promptloop/error.hpp"

namespace promptloop {

/// Decoded raster with row-major interleaved samples normalized to [0, 1].
class image_buffer {
public:
    image_buffer() = default;

    image_buffer(std::size_t width, std::size_t height, std::size_t channels, std::vector<double> samples)
        : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
        if (width_ == 0 || height_ == 0)
            throw precondition_error("image dimensions must be at least 1x1");
        if (channels_ != 1 && channels_ != 3)
            throw precondition_error("image channel count must be 1 or 3, got " + std::to_string(channels_));
        if (samples_.size() != width_ * height_ * channels_)
            throw precondition_error("sample count " + std::to_string(samples_.size()) + " does not match " +
                                     shape_string());
        for (double s : samples_) {
            if (!(s >= 0.0 && s <= 1.0))
                throw precondition_error("image sample outside [0, 1]: " + std::to_string(s));
        }
    }

    static image_buffer filled(std::size_t width, std::size_t height, std::size_t channels, double value) {
        return image_buffer(width, height, channels, std::vector<double>(width * height * channels, value));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    bool empty() const noexcept { return samples_.empty(); }

    std::span<const double> samples() const noexcept { return samples_; }

    double at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return samples_[(y * width_ + x) * channels_ + c];
    }

    bool same_shape(const image_buffer& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    std::string shape_string() const {
        return std::to_string(width_) + "x" + std::to_string(height_) + "x" + std::to_string(channels_);
    }

    friend bool operator==(const image_buffer&, const image_buffer&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> samples_;
};

enum class luma_range { unit, byte };

/// Single-plane luminance image; values lie in [0, 1] or [0, 255] according to `range`.
struct gray_image {
    std::size_t width = 0;
    std::size_t height = 0;
    luma_range range = luma_range::unit;
    std::vector<double> samples;

    gray_image() = default;
    gray_image(std::size_t w, std::size_t h, luma_range r = luma_range::unit)
        : width(w), height(h), range(r), samples(w * h, 0.0) {}
    gray_image(std::size_t w, std::size_t h, std::vector<double> s, luma_range r = luma_range::unit)
        : width(w), height(h), range(r), samples(std::move(s)) {
        if (samples.size() != width * height)
            throw precondition_error("gray image sample count does not match dimensions");
    }

    double& operator()(std::size_t x, std::size_t y) { return samples[y * width + x]; }
    double operator()(std::size_t x, std::size_t y) const { return samples[y * width + x]; }

    std::string shape_string() const { return std::to_string(width) + "x" + std::to_string(height); }
};

inline void require_same_shape(const image_buffer& a, const image_buffer& b) {
    if (!a.same_shape(b))
        throw shape_error("image shapes differ: " + a.shape_string() + " vs " + b.shape_string());
}

inline void require_same_shape(const gray_image& a, const gray_image& b) {
    if (a.width != b.width || a.height != b.height)
        throw shape_error("image shapes differ: " + a.shape_string() + " vs " + b.shape_string());
}

} // namespace promptloop
