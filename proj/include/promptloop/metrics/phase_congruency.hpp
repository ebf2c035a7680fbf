#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "promptloop/image/fft.hpp"
#include "promptloop/image/image_buffer.hpp"
#include "promptloop/metrics/metric_config.hpp"

namespace promptloop {

struct phase_congruency_params {
    std::size_t scales = 4;
    std::size_t orientations = 4;
    double min_wavelength = 6.0;
    double mult = 2.0;
    double sigma_on_f = 0.55;
    double d_theta_on_sigma = 1.2;
    double noise_k = 2.0;
    double epsilon = 1e-4;
    double lowpass_cutoff = 0.45;
    int lowpass_order = 15;
    // empirical rescaling of the noise threshold used by FSIM's PC measure
    double noise_rescale = 1.7;

    static phase_congruency_params from(const metric_config& cfg) {
        phase_congruency_params p;
        p.scales = cfg.fsim_scales;
        p.orientations = cfg.fsim_orientations;
        p.min_wavelength = cfg.fsim_min_wavelength;
        p.mult = cfg.fsim_mult;
        p.sigma_on_f = cfg.fsim_sigma_f;
        return p;
    }
};

namespace detail {

// Normalized frequency coordinate of unshifted FFT index i along an axis of length n.
inline double frequency_coordinate(std::size_t i, std::size_t n) {
    const std::size_t half = n / 2;
    const std::size_t shifted = (i + half) % n;
    if (n % 2 == 1)
        return n == 1 ? 0.0 : (static_cast<double>(shifted) - static_cast<double>(n - 1) / 2.0) / static_cast<double>(n - 1);
    return (static_cast<double>(shifted) - static_cast<double>(half)) / static_cast<double>(n);
}

inline double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return (lower + upper) / 2.0;
}

} // namespace detail

/// Log-Gabor filter bank for one image size, plus the image-independent terms of the
/// per-orientation noise model.
class log_gabor_bank {
public:
    log_gabor_bank(std::size_t width, std::size_t height, const phase_congruency_params& params)
        : width_(width), height_(height), params_(params) {
        const std::size_t n = width * height;
        std::vector<double> radius(n), sin_theta(n), cos_theta(n), lowpass(n);
        for (std::size_t y = 0; y < height; ++y) {
            const double fy = detail::frequency_coordinate(y, height);
            for (std::size_t x = 0; x < width; ++x) {
                const double fx = detail::frequency_coordinate(x, width);
                const std::size_t i = y * width + x;
                const double r = std::sqrt(fx * fx + fy * fy);
                lowpass[i] = 1.0 / (1.0 + std::pow(r / params.lowpass_cutoff, 2.0 * params.lowpass_order));
                radius[i] = r;
                const double theta = std::atan2(-fy, fx);
                sin_theta[i] = std::sin(theta);
                cos_theta[i] = std::cos(theta);
            }
        }
        radius[0] = 1.0;

        std::vector<std::vector<double>> radial(params.scales, std::vector<double>(n));
        const double log_sigma = std::log(params.sigma_on_f);
        for (std::size_t s = 0; s < params.scales; ++s) {
            const double wavelength = params.min_wavelength * std::pow(params.mult, static_cast<double>(s));
            const double fo = 1.0 / wavelength;
            for (std::size_t i = 0; i < n; ++i) {
                const double l = std::log(radius[i] / fo);
                radial[s][i] = std::exp(-(l * l) / (2.0 * log_sigma * log_sigma)) * lowpass[i];
            }
            radial[s][0] = 0.0;
        }

        const double theta_sigma = std::numbers::pi / static_cast<double>(params.orientations) / params.d_theta_on_sigma;
        filters_.assign(params.orientations, std::vector<std::vector<double>>(params.scales));
        noise_.resize(params.orientations);
        for (std::size_t o = 0; o < params.orientations; ++o) {
            const double angle = static_cast<double>(o) * std::numbers::pi / static_cast<double>(params.orientations);
            const double ca = std::cos(angle);
            const double sa = std::sin(angle);
            std::vector<double> spread(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double ds = sin_theta[i] * ca - cos_theta[i] * sa;
                const double dc = cos_theta[i] * ca + sin_theta[i] * sa;
                const double dtheta = std::abs(std::atan2(ds, dc));
                spread[i] = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
            }

            std::vector<std::vector<double>> spatial(params.scales);
            for (std::size_t s = 0; s < params.scales; ++s) {
                auto& filter = filters_[o][s];
                filter.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    filter[i] = radial[s][i] * spread[i];

                complex_field f(width, height);
                for (std::size_t i = 0; i < n; ++i)
                    f.values[i] = filter[i];
                f = ifft2(std::move(f));
                spatial[s].resize(n);
                const double root_n = std::sqrt(static_cast<double>(n));
                for (std::size_t i = 0; i < n; ++i)
                    spatial[s][i] = f.values[i].real() * root_n;
            }

            noise_terms& t = noise_[o];
            for (double v : filters_[o][0])
                t.smallest_scale_energy += v * v;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t si = 0; si < params.scales; ++si) {
                    t.sum_an2 += spatial[si][i] * spatial[si][i];
                    for (std::size_t sj = si + 1; sj < params.scales; ++sj)
                        t.sum_ai_aj += spatial[si][i] * spatial[sj][i];
                }
            }
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    const phase_congruency_params& params() const noexcept { return params_; }

    std::span<const double> filter(std::size_t orientation, std::size_t scale) const {
        return filters_[orientation][scale];
    }

    struct noise_terms {
        double smallest_scale_energy = 0.0;
        double sum_an2 = 0.0;
        double sum_ai_aj = 0.0;
    };

    const noise_terms& noise(std::size_t orientation) const { return noise_[orientation]; }

private:
    std::size_t width_;
    std::size_t height_;
    phase_congruency_params params_;
    std::vector<std::vector<std::vector<double>>> filters_;
    std::vector<noise_terms> noise_;
};

/// Phase congruency map in [0, 1]; pixels with no filter response at all are 0.
inline gray_image phase_congruency(const gray_image& img, const log_gabor_bank& bank) {
    if (img.width != bank.width() || img.height != bank.height())
        throw shape_error("filter bank built for " + std::to_string(bank.width()) + "x" +
                          std::to_string(bank.height()) + ", image is " + img.shape_string());
    const auto& p = bank.params();
    const std::size_t n = img.width * img.height;
    const complex_field spectrum = fft2(img);

    std::vector<double> energy_all(n, 0.0), amplitude_all(n, 0.0);
    std::vector<complex_field> responses(p.scales);
    std::vector<double> sum_e(n), sum_o(n), sum_an(n), energy(n), smallest_power(n);

    for (std::size_t o = 0; o < p.orientations; ++o) {
        std::fill(sum_e.begin(), sum_e.end(), 0.0);
        std::fill(sum_o.begin(), sum_o.end(), 0.0);
        std::fill(sum_an.begin(), sum_an.end(), 0.0);
        std::fill(energy.begin(), energy.end(), 0.0);

        for (std::size_t s = 0; s < p.scales; ++s) {
            responses[s] = filter_spectrum(spectrum, bank.filter(o, s));
            for (std::size_t i = 0; i < n; ++i) {
                const complex_t eo = responses[s].values[i];
                sum_an[i] += std::abs(eo);
                sum_e[i] += eo.real();
                sum_o[i] += eo.imag();
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double x_energy = std::sqrt(sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]) + p.epsilon;
            const double mean_e = sum_e[i] / x_energy;
            const double mean_o = sum_o[i] / x_energy;
            for (std::size_t s = 0; s < p.scales; ++s) {
                const double e = responses[s].values[i].real();
                const double od = responses[s].values[i].imag();
                energy[i] += e * mean_e + od * mean_o - std::abs(e * mean_o - od * mean_e);
            }
            smallest_power[i] = std::norm(responses[0].values[i]);
        }

        // Rayleigh noise model fitted to the median smallest-scale response power.
        const auto& terms = bank.noise(o);
        const double mean_e2n = -detail::median_of(smallest_power) / std::log(0.5);
        const double noise_power = mean_e2n / terms.smallest_scale_energy;
        const double noise_energy2 = 2.0 * noise_power * terms.sum_an2 + 4.0 * noise_power * terms.sum_ai_aj;
        const double tau = std::sqrt(noise_energy2 / 2.0);
        const double noise_mean = tau * std::sqrt(std::numbers::pi / 2.0);
        const double noise_sigma = std::sqrt((2.0 - std::numbers::pi / 2.0) * tau * tau);
        const double threshold = (noise_mean + p.noise_k * noise_sigma) / p.noise_rescale;

        for (std::size_t i = 0; i < n; ++i) {
            energy_all[i] += std::max(energy[i] - threshold, 0.0);
            amplitude_all[i] += sum_an[i];
        }
    }

    gray_image pc(img.width, img.height);
    for (std::size_t i = 0; i < n; ++i)
        pc.samples[i] = amplitude_all[i] > 0.0 ? energy_all[i] / amplitude_all[i] : 0.0;
    return pc;
}

inline gray_image phase_congruency(const gray_image& img, const phase_congruency_params& params = {}) {
    return phase_congruency(img, log_gabor_bank(img.width, img.height, params));
}

} // namespace promptloop
