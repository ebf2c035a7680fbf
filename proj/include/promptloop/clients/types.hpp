#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "promptloop/error.hpp"

namespace promptloop {

inline constexpr const char* default_instruction = "Generate prompt and negative prompt for this image.";

struct prompt_pair {
    std::string positive;
    std::string negative;
    std::string raw_response;

    friend bool operator==(const prompt_pair&, const prompt_pair&) = default;
};

/// img2img knobs. `seed` absent lets the service choose.
struct generation_params {
    double strength = 0.6;
    int steps = 30;
    double guidance = 7.5;
    std::optional<std::uint64_t> seed;

    void validate() const {
        if (!(strength > 0.0 && strength <= 1.0))
            throw precondition_error("strength must lie in (0, 1], got " + std::to_string(strength));
        if (steps < 1)
            throw precondition_error("steps must be at least 1, got " + std::to_string(steps));
        if (!(guidance >= 0.0) || !std::isfinite(guidance))
            throw precondition_error("guidance must be a finite non-negative number");
    }

    friend bool operator==(const generation_params&, const generation_params&) = default;
};

struct backend_endpoint {
    std::string base_url;
    double timeout_seconds = 60.0;
    int max_retries = 2;
    std::optional<std::string> auth_token;
    std::chrono::milliseconds initial_backoff{250};
    int concurrency = 4;

    void validate() const {
        if (base_url.empty())
            throw precondition_error("endpoint base_url is empty");
        if (!(timeout_seconds > 0.0))
            throw precondition_error("endpoint timeout must be positive");
        if (max_retries < 0)
            throw precondition_error("endpoint max_retries must be non-negative");
        if (concurrency < 1)
            throw precondition_error("endpoint concurrency limit must be at least 1");
    }
};

} // namespace promptloop
