#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "promptloop/image/codec.hpp"
#include "promptloop/image/image_buffer.hpp"

namespace promptloop::mock {

inline constexpr std::uint64_t fnv1a_offset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t fnv1a_prime = 0x100000001b3ull;

inline std::uint64_t fnv1a64_update(std::uint64_t h, std::uint8_t byte) { return (h ^ byte) * fnv1a_prime; }

inline std::uint64_t fnv1a64_update_u64(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        h = fnv1a64_update(h, static_cast<std::uint8_t>(v >> (8 * i)));
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// FNV-1a 64 over width, height, channels (little-endian u64 each) followed by the
/// 8-bit quantized samples. Stable across platforms and across a PNG round trip.
inline std::uint64_t image_hash(const image_buffer& img) {
    std::uint64_t h = fnv1a_offset;
    h = fnv1a64_update_u64(h, img.width());
    h = fnv1a64_update_u64(h, img.height());
    h = fnv1a64_update_u64(h, img.channels());
    for (double s : img.samples())
        h = fnv1a64_update(h, detail::quantize8(s));
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Standard normal draws from std::mt19937_64 via Box-Muller. Both the engine and the
/// transform are fully specified, so sequences match on every conforming platform.
class gaussian_source {
public:
    explicit gaussian_source(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - unit();  // (0, 1]
        const double u2 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

private:
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace promptloop::mock
