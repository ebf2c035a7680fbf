#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>

#include "promptloop/clients/types.hpp"
#include "promptloop/error.hpp"
#include "promptloop/metrics/metric_config.hpp"

namespace promptloop::cli {

class usage_error : public error {
public:
    using error::error;
};

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "prompter",    "generator",      "endpoint",          "timeout",     "retries",      "token",
        "concurrency", "instruction",    "strength",          "steps",       "guidance",     "seed",
        "out",         "format",         "behavior_file",     "ssim_window", "ssim_sigma",   "ssim_k1",
        "ssim_k2",     "uiq_window",     "fsim_scales",       "fsim_orientations",           "fsim_min_wavelength",
        "fsim_mult",   "fsim_sigma_f",   "fsim_t1",           "fsim_t2",     "psnr_max",     "conditions"};
    return keys;
}

inline std::string normalize_key(std::string_view k) {
    std::string out;
    for (char c : k)
        out += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return std::string(s);
}

/// Reads `key = value` lines. `#` starts a comment, `[section]` headers are accepted and ignored,
/// and values may be wrapped in double quotes.
inline std::map<std::string, std::string> parse_config_text(std::string_view text, const std::string& origin) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string line(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"')
                quoted = !quoted;
            else if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty() || (line.front() == '[' && line.back() == ']'))
            continue;
        const auto eq = line.find('=');
        const auto where = origin + ":" + std::to_string(line_no);
        if (eq == std::string::npos)
            throw usage_error(where + ": expected key = value");
        const auto key = normalize_key(trim(std::string_view(line).substr(0, eq)));
        auto value = trim(std::string_view(line).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (!known_keys().count(key))
            throw usage_error(where + ": unknown key '" + key + "'");
        out[key] = value;
    }
    return out;
}

/// Layered settings: command-line flags, then PROMPTLOOP_* environment variables, then the config file.
class settings {
public:
    std::map<std::string, std::string> flags;
    std::map<std::string, std::string> file;

    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in)
            throw usage_error("cannot read config file " + path.string());
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        file = parse_config_text(text, path.string());
    }

    static std::string env_name(const std::string& key) {
        std::string name = "PROMPTLOOP_";
        for (char c : key)
            name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return name;
    }

    struct value {
        std::string text;
        std::string source;
    };

    std::optional<value> lookup(const std::string& key) const {
        if (auto it = flags.find(key); it != flags.end())
            return value{it->second, "flag --" + dashed(key)};
        if (const char* env = std::getenv(env_name(key).c_str()))
            return value{env, "environment " + env_name(key)};
        if (auto it = file.find(key); it != file.end())
            return value{it->second, "config file"};
        return std::nullopt;
    }

    std::optional<std::string> get(const std::string& key) const {
        auto v = lookup(key);
        return v ? std::optional<std::string>(v->text) : std::nullopt;
    }

    std::string get_or(const std::string& key, std::string fallback) const { return get(key).value_or(fallback); }

    template <class T>
    std::optional<T> number(const std::string& key) const {
        auto v = lookup(key);
        if (!v)
            return std::nullopt;
        T out{};
        const auto* first = v->text.data();
        const auto* last = first + v->text.size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last || v->text.empty())
            throw usage_error("invalid value '" + v->text + "' for " + key + " (from " + v->source + ")");
        return out;
    }

    template <class T>
    void apply(const std::string& key, T& target) const {
        if (auto v = number<T>(key))
            target = *v;
    }

private:
    static std::string dashed(std::string key) {
        for (auto& c : key)
            if (c == '_')
                c = '-';
        return key;
    }
};

inline metric_config metric_config_from(const settings& s) {
    metric_config cfg;
    s.apply("ssim_window", cfg.ssim_window);
    s.apply("ssim_sigma", cfg.ssim_sigma);
    s.apply("ssim_k1", cfg.ssim_k1);
    s.apply("ssim_k2", cfg.ssim_k2);
    s.apply("uiq_window", cfg.uiq_window);
    s.apply("fsim_scales", cfg.fsim_scales);
    s.apply("fsim_orientations", cfg.fsim_orientations);
    s.apply("fsim_min_wavelength", cfg.fsim_min_wavelength);
    s.apply("fsim_mult", cfg.fsim_mult);
    s.apply("fsim_sigma_f", cfg.fsim_sigma_f);
    s.apply("fsim_t1", cfg.fsim_t1);
    s.apply("fsim_t2", cfg.fsim_t2);
    s.apply("psnr_max", cfg.psnr_max);
    cfg.validate();
    return cfg;
}

inline backend_endpoint endpoint_from(const settings& s, const std::string& url_key) {
    backend_endpoint ep;
    auto url = s.get(url_key);
    if (!url && url_key != "endpoint")
        url = s.get("endpoint");
    if (!url || url->empty())
        throw usage_error("no " + url_key + " endpoint configured (use --" + url_key + ", " +
                          settings::env_name(url_key) + " or the config file)");
    ep.base_url = *url;
    s.apply("timeout", ep.timeout_seconds);
    s.apply("retries", ep.max_retries);
    s.apply("concurrency", ep.concurrency);
    if (auto t = s.get("token"); t && !t->empty())
        ep.auth_token = *t;
    ep.validate();
    return ep;
}

/// Overlays configured generation knobs on `base`.
inline generation_params generation_params_from(const settings& s, generation_params base = {},
                                                bool use_seed = true) {
    s.apply("strength", base.strength);
    s.apply("steps", base.steps);
    s.apply("guidance", base.guidance);
    if (use_seed)
        if (auto seed = s.number<std::uint64_t>("seed"))
            base.seed = *seed;
    base.validate();
    return base;
}

} // namespace promptloop::cli
