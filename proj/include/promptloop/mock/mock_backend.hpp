#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "promptloop/clients/model_clients.hpp"
#include "promptloop/clients/types.hpp"
#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"
#include "promptloop/mock/determinism.hpp"

namespace promptloop::mock {

struct mock_behavior {
    std::string prompt_template =
        "Prompt: a faithful photograph of scene {hash}, serene atmosphere, fine detail, natural light\n"
        "Negative prompt: blurry, distorted, oversaturated, artifacts";
    double noise_with_prompt = 0.02;
    double noise_without_prompt = 0.08;
    // per-channel offset applied without a prompt; a gray image uses the first entry
    std::vector<double> hue_shift_without_prompt = {0.05, 0.0, 0.0};

    void validate() const {
        if (!(noise_with_prompt >= 0.0 && noise_with_prompt < noise_without_prompt && noise_without_prompt <= 0.5))
            throw precondition_error("mock noise levels must satisfy 0 <= noise_with_prompt < noise_without_prompt <= 0.5");
        if (hue_shift_without_prompt.empty() || hue_shift_without_prompt.size() > 3)
            throw precondition_error("hue_shift_without_prompt needs 1 to 3 entries");
        for (double v : hue_shift_without_prompt)
            if (!std::isfinite(v) || std::abs(v) > 1.0)
                throw precondition_error("hue shift entries must be finite and within [-1, 1]");
    }

    static mock_behavior from_json(const nlohmann::json& j) {
        mock_behavior b;
        if (!j.is_object())
            throw precondition_error("behavior file must contain a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "prompt_template")
                b.prompt_template = value.get<std::string>();
            else if (key == "noise_with_prompt")
                b.noise_with_prompt = value.get<double>();
            else if (key == "noise_without_prompt")
                b.noise_without_prompt = value.get<double>();
            else if (key == "hue_shift_without_prompt")
                b.hue_shift_without_prompt = value.is_array() ? value.get<std::vector<double>>()
                                                              : std::vector<double>{value.get<double>()};
            else
                throw precondition_error("unknown behavior field '" + key + "'");
        }
        b.validate();
        return b;
    }
};

/// Labeled two-line reply derived from the image hash, plus a trailing comment echoing
/// the instruction.
inline std::string mock_prompts(const image_buffer& image, const std::string& instruction,
                                const mock_behavior& behavior = {}) {
    const std::string tag = hex64(image_hash(image));
    std::string reply = behavior.prompt_template;
    for (auto pos = reply.find("{hash}"); pos != std::string::npos; pos = reply.find("{hash}", pos + tag.size()))
        reply.replace(pos, 6, tag);
    std::string echoed = instruction;
    std::replace(echoed.begin(), echoed.end(), '\n', ' ');
    return reply + "\n# instruction: " + echoed;
}

inline std::uint64_t mock_generation_key(const image_buffer& init, const generation_params& params, bool prompt_empty) {
    std::uint64_t h = fnv1a64_update_u64(fnv1a_offset, image_hash(init));
    h = fnv1a64_update_u64(h, params.seed.value_or(0));
    h = fnv1a64_update(h, prompt_empty ? 1 : 0);
    return splitmix64(h);
}

/// Perturbs `init` with seeded Gaussian noise; a stronger noise plus a color offset
/// without a prompt.
inline image_buffer mock_generate(const image_buffer& init, const std::string& prompt, const std::string& negative,
                                  const generation_params& params, const mock_behavior& behavior = {}) {
    (void)negative;
    const bool prompt_empty = prompt.empty();
    const double sigma = prompt_empty ? behavior.noise_without_prompt : behavior.noise_with_prompt;
    gaussian_source noise(mock_generation_key(init, params, prompt_empty));

    const std::size_t channels = init.channels();
    std::vector<double> out(init.samples().begin(), init.samples().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = out[i];
        if (sigma > 0.0)
            v += sigma * noise.next();
        if (prompt_empty) {
            const std::size_t c = i % channels;
            if (c < behavior.hue_shift_without_prompt.size())
                v += behavior.hue_shift_without_prompt[c];
        }
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    return image_buffer(init.width(), init.height(), channels, std::move(out));
}

class mock_prompter final : public prompter {
public:
    explicit mock_prompter(mock_behavior behavior = {}) : behavior_((behavior.validate(), std::move(behavior))) {}

    prompt_pair request_prompts(const image_buffer& image, const std::string& instruction) const override {
        return parse_prompt_reply(mock_prompts(image, instruction, behavior_));
    }

private:
    mock_behavior behavior_;
};

class mock_generator final : public generator {
public:
    explicit mock_generator(mock_behavior behavior = {}) : behavior_((behavior.validate(), std::move(behavior))) {}

    image_buffer generate_image(const image_buffer& init, const std::optional<prompt_pair>& prompts,
                                const generation_params& params) const override {
        params.validate();
        return prompts ? mock_generate(init, prompts->positive, prompts->negative, params, behavior_)
                       : mock_generate(init, "", "", params, behavior_);
    }

private:
    mock_behavior behavior_;
};

} // namespace promptloop::mock
