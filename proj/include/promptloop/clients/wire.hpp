#pragma once

// JSON bodies of the two service endpoints:
//   POST {base}/v1/prompts  {"image_png_b64", "instruction"}                 -> {"reply"}
//   POST {base}/v1/img2img  {"init_png_b64", "prompt", "negative_prompt",
//                            "strength", "steps", "guidance", "seed"}        -> {"image_png_b64"}
// Failures answer 4xx/5xx with {"error"}.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>

#include "promptloop/clients/base64.hpp"
#include "promptloop/clients/types.hpp"
#include "promptloop/error.hpp"
#include "promptloop/image/codec.hpp"

namespace promptloop::wire {

using json = nlohmann::json;

inline constexpr const char* prompts_path = "/v1/prompts";
inline constexpr const char* img2img_path = "/v1/img2img";
inline constexpr const char* health_path = "/healthz";

/// Raised when a body does not match its documented shape.
class schema_error : public error {
public:
    using error::error;
};

namespace detail {

inline const json& object_with_exact_keys(const json& j, std::initializer_list<const char*> keys) {
    if (!j.is_object())
        throw schema_error("request body must be a JSON object");
    for (const char* k : keys)
        if (!j.contains(k))
            throw schema_error(std::string("missing field '") + k + "'");
    if (j.size() != keys.size()) {
        for (const auto& [k, _] : j.items()) {
            bool known = false;
            for (const char* e : keys)
                known = known || k == e;
            if (!known)
                throw schema_error("unexpected field '" + k + "'");
        }
    }
    return j;
}

inline std::string string_field(const json& j, const char* key) {
    if (!j.at(key).is_string())
        throw schema_error(std::string("field '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

inline double number_field(const json& j, const char* key) {
    if (!j.at(key).is_number())
        throw schema_error(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

} // namespace detail

struct prompts_request {
    std::string image_png_b64;
    std::string instruction;

    json to_json() const { return {{"image_png_b64", image_png_b64}, {"instruction", instruction}}; }

    static prompts_request from_json(const json& j) {
        detail::object_with_exact_keys(j, {"image_png_b64", "instruction"});
        return {detail::string_field(j, "image_png_b64"), detail::string_field(j, "instruction")};
    }
};

struct prompts_response {
    std::string reply;

    json to_json() const { return {{"reply", reply}}; }

    static prompts_response from_json(const json& j) {
        detail::object_with_exact_keys(j, {"reply"});
        return {detail::string_field(j, "reply")};
    }
};

struct img2img_request {
    std::string init_png_b64;
    std::string prompt;
    std::string negative_prompt;
    generation_params params;

    json to_json() const {
        json j = {{"init_png_b64", init_png_b64}, {"prompt", prompt},       {"negative_prompt", negative_prompt},
                  {"strength", params.strength},  {"steps", params.steps}, {"guidance", params.guidance}};
        j["seed"] = params.seed ? json(*params.seed) : json(nullptr);
        return j;
    }

    static img2img_request from_json(const json& j) {
        detail::object_with_exact_keys(
            j, {"init_png_b64", "prompt", "negative_prompt", "strength", "steps", "guidance", "seed"});
        img2img_request r;
        r.init_png_b64 = detail::string_field(j, "init_png_b64");
        r.prompt = detail::string_field(j, "prompt");
        r.negative_prompt = detail::string_field(j, "negative_prompt");
        r.params.strength = detail::number_field(j, "strength");
        r.params.guidance = detail::number_field(j, "guidance");
        if (!j.at("steps").is_number_integer())
            throw schema_error("field 'steps' must be an integer");
        r.params.steps = j.at("steps").get<int>();
        const auto& seed = j.at("seed");
        if (seed.is_null())
            r.params.seed = std::nullopt;
        else if (seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
            r.params.seed = seed.get<std::uint64_t>();
        else
            throw schema_error("field 'seed' must be a non-negative integer or null");
        return r;
    }
};

struct img2img_response {
    std::string image_png_b64;

    json to_json() const { return {{"image_png_b64", image_png_b64}}; }

    static img2img_response from_json(const json& j) {
        detail::object_with_exact_keys(j, {"image_png_b64"});
        return {detail::string_field(j, "image_png_b64")};
    }
};

inline json error_body(const std::string& message) { return {{"error", message}}; }

inline std::string image_to_png_b64(const image_buffer& img) { return base64::encode(encode(img, image_format::png)); }

/// Throws schema_error on bad base64, decode_error on a bad PNG stream.
inline image_buffer image_from_png_b64(const std::string& text) {
    const auto bytes = base64::decode(text);
    if (!bytes)
        throw schema_error("image field is not valid base64");
    return decode(*bytes, image_format::png);
}

} // namespace promptloop::wire
