#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include "promptloop/clients/prompt_parser.hpp"
#include "promptloop/clients/types.hpp"
#include "promptloop/clients/wire.hpp"
#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"

namespace promptloop {

/// Source of prompt pairs for an image (the vision-LLM side).
class prompter {
public:
    virtual ~prompter() = default;
    virtual prompt_pair request_prompts(const image_buffer& image, const std::string& instruction) const = 0;
};

/// img2img generator; absent prompts mean the prompt-less baseline.
class generator {
public:
    virtual ~generator() = default;
    virtual image_buffer generate_image(const image_buffer& init, const std::optional<prompt_pair>& prompts,
                                        const generation_params& params) const = 0;
};

struct parsed_url {
    std::string scheme_host_port;
    std::string path_prefix;
};

inline parsed_url parse_base_url(const std::string& url) {
    constexpr std::string_view scheme = "http://";
    if (url.rfind(scheme, 0) != 0)
        throw precondition_error("endpoint URL must start with http://, got '" + url + "'");
    const auto slash = url.find('/', scheme.size());
    parsed_url out;
    out.scheme_host_port = url.substr(0, slash);
    if (slash != std::string::npos) {
        out.path_prefix = url.substr(slash);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    if (out.scheme_host_port.size() == scheme.size())
        throw precondition_error("endpoint URL has no host: '" + url + "'");
    return out;
}

/// JSON-over-HTTP POST with bounded retries and a per-endpoint concurrency cap.
///
/// Connection failures and 5xx answers are retried exactly `max_retries` times with
/// exponential backoff (initial_backoff, doubling). 4xx answers are not retried.
class json_transport {
public:
    explicit json_transport(backend_endpoint endpoint)
        : endpoint_((endpoint.validate(), std::move(endpoint))),
          url_(parse_base_url(endpoint_.base_url)),
          slots_(std::make_shared<std::counting_semaphore<>>(endpoint_.concurrency)) {}

    const backend_endpoint& endpoint() const noexcept { return endpoint_; }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        const std::string payload = body.dump();
        const std::string target = url_.path_prefix + path;
        std::string last_failure;
        auto backoff = endpoint_.initial_backoff;

        for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }

            httplib::Result res = [&] {
                slots_->acquire();
                struct release_guard {
                    std::counting_semaphore<>& s;
                    ~release_guard() { s.release(); }
                } guard{*slots_};
                httplib::Client client(url_.scheme_host_port);
                const auto secs = static_cast<time_t>(endpoint_.timeout_seconds);
                const auto usecs = static_cast<time_t>((endpoint_.timeout_seconds - static_cast<double>(secs)) * 1e6);
                client.set_connection_timeout(secs, usecs);
                client.set_read_timeout(secs, usecs);
                client.set_write_timeout(secs, usecs);
                httplib::Headers headers;
                if (endpoint_.auth_token)
                    headers.emplace("Authorization", "Bearer " + *endpoint_.auth_token);
                return client.Post(target, headers, payload, "application/json");
            }();

            if (!res) {
                last_failure = httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_failure = "HTTP " + std::to_string(res->status) + ": " + error_message(res->body);
                continue;
            }
            if (res->status != 200)
                throw backend_rejected_error(endpoint_.base_url + target + " rejected the request (HTTP " +
                                                 std::to_string(res->status) + "): " + error_message(res->body),
                                             res->status);
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw payload_error(endpoint_.base_url + target + " returned invalid JSON: " + e.what());
            }
        }
        throw backend_unreachable_error(endpoint_.base_url + target + " unreachable after " +
                                        std::to_string(endpoint_.max_retries + 1) + " attempt(s): " + last_failure);
    }

private:
    static std::string error_message(const std::string& body) {
        const auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_object() && j.contains("error") && j["error"].is_string())
            return j["error"].get<std::string>();
        return body.substr(0, 200);
    }

    backend_endpoint endpoint_;
    parsed_url url_;
    std::shared_ptr<std::counting_semaphore<>> slots_;
};

class http_prompter final : public prompter {
public:
    explicit http_prompter(backend_endpoint endpoint) : transport_(std::move(endpoint)) {}

    prompt_pair request_prompts(const image_buffer& image, const std::string& instruction) const override {
        if (instruction.empty())
            throw precondition_error("prompt instruction must not be empty");
        const wire::prompts_request req{wire::image_to_png_b64(image), instruction};
        const auto body = transport_.post(wire::prompts_path, req.to_json());
        wire::prompts_response resp;
        try {
            resp = wire::prompts_response::from_json(body);
        } catch (const wire::schema_error& e) {
            throw payload_error(std::string("prompt service response: ") + e.what());
        }
        return parse_prompt_reply(resp.reply);
    }

private:
    json_transport transport_;
};

class http_generator final : public generator {
public:
    explicit http_generator(backend_endpoint endpoint) : transport_(std::move(endpoint)) {}

    image_buffer generate_image(const image_buffer& init, const std::optional<prompt_pair>& prompts,
                                const generation_params& params) const override {
        params.validate();
        wire::img2img_request req;
        req.init_png_b64 = wire::image_to_png_b64(init);
        if (prompts) {
            req.prompt = prompts->positive;
            req.negative_prompt = prompts->negative;
        }
        req.params = params;
        const auto body = transport_.post(wire::img2img_path, req.to_json());
        try {
            return wire::image_from_png_b64(wire::img2img_response::from_json(body).image_png_b64);
        } catch (const wire::schema_error& e) {
            throw payload_error(std::string("img2img response: ") + e.what());
        } catch (const decode_error& e) {
            throw payload_error(std::string("img2img response image: ") + e.what());
        }
    }

private:
    json_transport transport_;
};

inline prompt_pair request_prompts(const backend_endpoint& endpoint, const image_buffer& image,
                                   const std::string& instruction = default_instruction) {
    return http_prompter(endpoint).request_prompts(image, instruction);
}

inline image_buffer generate_image(const backend_endpoint& endpoint, const image_buffer& init,
                                   const std::optional<prompt_pair>& prompts, const generation_params& params) {
    return http_generator(endpoint).generate_image(init, prompts, params);
}

} // namespace promptloop
