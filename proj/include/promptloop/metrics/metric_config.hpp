#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "promptloop/error.hpp"

namespace promptloop {

struct metric_config {
    std::size_t ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_k1 = 0.01;
    double ssim_k2 = 0.03;
    std::size_t uiq_window = 8;
    std::size_t fsim_scales = 4;
    std::size_t fsim_orientations = 4;
    double fsim_min_wavelength = 6.0;
    double fsim_mult = 2.0;
    double fsim_sigma_f = 0.55;
    double fsim_t1 = 0.85;
    double fsim_t2 = 160.0;
    double psnr_max = 1.0;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw precondition_error(std::string(name) + " must be a positive finite number");
        };
        if (ssim_window < 2)
            throw precondition_error("ssim_window must be at least 2");
        if (uiq_window < 2)
            throw precondition_error("uiq_window must be at least 2");
        if (fsim_scales < 1 || fsim_orientations < 1)
            throw precondition_error("fsim_scales and fsim_orientations must be at least 1");
        positive(ssim_sigma, "ssim_sigma");
        positive(ssim_k1, "ssim_k1");
        positive(ssim_k2, "ssim_k2");
        positive(fsim_min_wavelength, "fsim_min_wavelength");
        positive(fsim_mult, "fsim_mult");
        positive(fsim_t1, "fsim_t1");
        positive(fsim_t2, "fsim_t2");
        positive(psnr_max, "psnr_max");
        if (!(fsim_sigma_f > 0.0 && fsim_sigma_f < 1.0))
            throw precondition_error("fsim_sigma_f must lie in (0, 1)");
    }
};

} // namespace promptloop
