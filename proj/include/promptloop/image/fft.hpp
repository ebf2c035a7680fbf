#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"

namespace promptloop {

using complex_t = std::complex<double>;

/// Row-major complex plane, height rows of width entries.
struct complex_field {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<complex_t> values;

    complex_field() = default;
    complex_field(std::size_t w, std::size_t h) : width(w), height(h), values(w * h) {}

    complex_t& operator()(std::size_t x, std::size_t y) { return values[y * width + x]; }
    const complex_t& operator()(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

namespace detail {

// FFTW's planner is not reentrant; execution of a finished plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

inline void fftw_transform(complex_field& field, int sign) {
    auto* data = reinterpret_cast<fftw_complex*>(field.values.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(field.height), static_cast<int>(field.width), data, data, sign,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
}

} // namespace detail

/// Unnormalized forward 2-D DFT.
inline complex_field fft2(const gray_image& img) {
    complex_field field(img.width, img.height);
    for (std::size_t i = 0; i < img.samples.size(); ++i)
        field.values[i] = img.samples[i];
    detail::fftw_transform(field, FFTW_FORWARD);
    return field;
}

/// Inverse 2-D DFT scaled by 1/(width*height), so ifft2(fft2(x)) == x.
inline complex_field ifft2(complex_field spectrum) {
    detail::fftw_transform(spectrum, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(spectrum.width * spectrum.height);
    for (auto& v : spectrum.values)
        v *= scale;
    return spectrum;
}

/// ifft2(spectrum ⊙ transfer) for an already-transformed image.
template <typename Mask>
complex_field filter_spectrum(const complex_field& spectrum, std::span<const Mask> transfer) {
    if (transfer.size() != spectrum.values.size())
        throw shape_error("transfer mask has " + std::to_string(transfer.size()) + " entries, expected " +
                          std::to_string(spectrum.values.size()));
    complex_field product(spectrum.width, spectrum.height);
    for (std::size_t i = 0; i < product.values.size(); ++i)
        product.values[i] = spectrum.values[i] * transfer[i];
    return ifft2(std::move(product));
}

/// Frequency-domain filtering: ifft2(fft2(img) ⊙ transfer). `transfer` is row-major, unshifted
/// (DC at index 0), with the same dimensions as `img`; real or complex entries.
template <typename Mask>
complex_field fft2_filter(const gray_image& img, std::span<const Mask> transfer) {
    if (transfer.size() != img.width * img.height)
        throw shape_error("transfer mask has " + std::to_string(transfer.size()) + " entries, image " +
                          img.shape_string() + " needs " + std::to_string(img.width * img.height));
    return filter_spectrum(fft2(img), transfer);
}

template <typename Mask>
complex_field fft2_filter(const gray_image& img, const std::vector<Mask>& transfer) {
    return fft2_filter(img, std::span<const Mask>(transfer));
}

} // namespace promptloop
