#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"
#include "promptloop/metrics/fsim.hpp"
#include "promptloop/metrics/metric_config.hpp"
#include "promptloop/metrics/pixel_metrics.hpp"
#include "promptloop/metrics/ssim.hpp"
#include "promptloop/metrics/uiq.hpp"

namespace promptloop {

enum class metric_id { rmse, psnr, fsim, ssim, uiq, sre };

inline constexpr std::array<metric_id, 6> all_metrics = {metric_id::rmse, metric_id::psnr, metric_id::fsim,
                                                         metric_id::ssim, metric_id::uiq,  metric_id::sre};

inline constexpr std::string_view metric_name(metric_id m) {
    switch (m) {
    case metric_id::rmse: return "rmse";
    case metric_id::psnr: return "psnr";
    case metric_id::fsim: return "fsim";
    case metric_id::ssim: return "ssim";
    case metric_id::uiq: return "uiq";
    case metric_id::sre: return "sre";
    }
    return "";
}

inline constexpr std::string_view metric_label(metric_id m) {
    switch (m) {
    case metric_id::rmse: return "RMSE";
    case metric_id::psnr: return "PSNR";
    case metric_id::fsim: return "FSIM";
    case metric_id::ssim: return "SSIM";
    case metric_id::uiq: return "UIQ";
    case metric_id::sre: return "SRE";
    }
    return "";
}

// rmse is better when lower; every other metric is better when higher
inline constexpr bool lower_is_better(metric_id m) { return m == metric_id::rmse; }

inline bool is_better(metric_id m, double candidate, double incumbent) {
    return lower_is_better(m) ? candidate < incumbent : candidate > incumbent;
}

struct metric_report {
    double rmse = 0.0;
    double psnr = 0.0;
    double fsim = 0.0;
    double ssim = 0.0;
    double uiq = 0.0;
    double sre = 0.0;

    double get(metric_id m) const {
        switch (m) {
        case metric_id::rmse: return rmse;
        case metric_id::psnr: return psnr;
        case metric_id::fsim: return fsim;
        case metric_id::ssim: return ssim;
        case metric_id::uiq: return uiq;
        case metric_id::sre: return sre;
        }
        return 0.0;
    }

    double& get(metric_id m) {
        switch (m) {
        case metric_id::rmse: return rmse;
        case metric_id::psnr: return psnr;
        case metric_id::fsim: return fsim;
        case metric_id::ssim: return ssim;
        case metric_id::uiq: return uiq;
        case metric_id::sre: break;
        }
        return sre;
    }

    bool has_infinite() const {
        for (auto m : all_metrics)
            if (std::isinf(get(m)))
                return true;
        return false;
    }

    void validate() const {
        if (!(rmse >= 0.0) || std::isinf(rmse))
            throw precondition_error("rmse must be finite and non-negative");
        if (!(fsim >= 0.0 && fsim <= 1.0))
            throw precondition_error("fsim must lie in [0, 1]");
        if (!(ssim >= -1.0 && ssim <= 1.0))
            throw precondition_error("ssim must lie in [-1, 1]");
        if (!(uiq >= -1.0 && uiq <= 1.0))
            throw precondition_error("uiq must lie in [-1, 1]");
        if ((rmse == 0.0) != (std::isinf(psnr) && psnr > 0))
            throw precondition_error("psnr is +inf exactly when rmse is 0");
        if (std::isnan(psnr) || std::isnan(sre))
            throw precondition_error("psnr and sre must not be NaN");
    }

    friend bool operator==(const metric_report&, const metric_report&) = default;
};

inline metric_report compare_all(const image_buffer& ref, const image_buffer& cand, const metric_config& cfg = {}) {
    cfg.validate();
    require_same_shape(ref, cand);
    metric_report r;
    const double m = mse(ref, cand);
    r.rmse = std::sqrt(m);
    r.psnr = psnr_from_mse(m, cfg.psnr_max);
    r.sre = sre(ref, cand);
    const auto luma_ref = to_luminance(ref);
    const auto luma_cand = to_luminance(cand);
    r.ssim = ssim(luma_ref, luma_cand, cfg);
    r.uiq = uiq(luma_ref, luma_cand, cfg);
    r.fsim = fsim(ref, cand, cfg);
    return r;
}

} // namespace promptloop
