#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include "promptloop/clients/wire.hpp"
#include "promptloop/error.hpp"
#include "promptloop/mock/mock_backend.hpp"

namespace promptloop::mock {

/// One request/response pair as seen by the server.
struct exchange {
    std::string path;
    std::string request_body;
    int status = 0;
    std::string response_body;
};

struct server_options {
    std::optional<std::string> required_token;
    std::ostream* log = nullptr;
    std::function<void(const exchange&)> recorder;
};

/// HTTP server implementing both service endpoints with the deterministic mocks.
class mock_server {
public:
    explicit mock_server(mock_behavior behavior = {}, server_options options = {})
        : behavior_((behavior.validate(), std::move(behavior))), options_(std::move(options)) {
        // no SO_REUSEPORT: a second server on a busy port must fail to bind
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        server_.Get(wire::health_path, [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        server_.Post(wire::prompts_path, [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, [this](const nlohmann::json& body) { return prompts(body); });
        });
        server_.Post(wire::img2img_path, [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, [this](const nlohmann::json& body) { return img2img(body); });
        });
        server_.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
            if (!options_.log)
                return;
            std::lock_guard lock(log_mutex_);
            *options_.log << req.method << ' ' << req.path << ' ' << res.status << ' ' << res.body.size() << "B\n"
                          << std::flush;
        });
    }

    mock_server(const mock_server&) = delete;
    mock_server& operator=(const mock_server&) = delete;

    ~mock_server() { stop(); }

    /// Binds and starts serving on a background thread. Port 0 picks a free port.
    /// Throws when the port cannot be bound.
    int start(const std::string& host = "127.0.0.1", int port = 0) {
        if (port == 0)
            port_ = server_.bind_to_any_port(host);
        else
            port_ = server_.bind_to_port(host, port) ? port : -1;
        if (port_ < 0)
            throw error("cannot bind mock server to " + host + ":" + std::to_string(port));
        host_ = host;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void stop() {
        server_.stop();
        if (thread_.joinable())
            thread_.join();
    }

    int port() const noexcept { return port_; }
    std::string base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

private:
    struct reply {
        int status;
        nlohmann::json body;
    };

    template <typename Handler>
    void handle(const httplib::Request& req, httplib::Response& res, Handler&& fn) {
        reply r{500, wire::error_body("internal error")};
        if (options_.required_token && req.get_header_value("Authorization") != "Bearer " + *options_.required_token) {
            r = {401, wire::error_body("missing or invalid bearer token")};
        } else {
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (body.is_discarded()) {
                r = {400, wire::error_body("request body is not valid JSON")};
            } else {
                try {
                    r = fn(body);
                } catch (const wire::schema_error& e) {
                    r = {400, wire::error_body(e.what())};
                } catch (const decode_error& e) {
                    r = {400, wire::error_body(std::string("image payload: ") + e.what())};
                } catch (const precondition_error& e) {
                    r = {400, wire::error_body(e.what())};
                } catch (const std::exception& e) {
                    r = {500, wire::error_body(e.what())};
                }
            }
        }
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
        if (options_.recorder)
            options_.recorder(exchange{req.path, req.body, r.status, res.body});
    }

    reply prompts(const nlohmann::json& body) const {
        const auto req = wire::prompts_request::from_json(body);
        if (req.instruction.empty())
            throw precondition_error("instruction must not be empty");
        const auto image = wire::image_from_png_b64(req.image_png_b64);
        return {200, wire::prompts_response{mock_prompts(image, req.instruction, behavior_)}.to_json()};
    }

    reply img2img(const nlohmann::json& body) const {
        const auto req = wire::img2img_request::from_json(body);
        req.params.validate();
        const auto init = wire::image_from_png_b64(req.init_png_b64);
        const auto out = mock_generate(init, req.prompt, req.negative_prompt, req.params, behavior_);
        return {200, wire::img2img_response{wire::image_to_png_b64(out)}.to_json()};
    }

    mock_behavior behavior_;
    server_options options_;
    httplib::Server server_;
    std::thread thread_;
    std::mutex log_mutex_;
    std::string host_ = "127.0.0.1";
    int port_ = -1;
};

} // namespace promptloop::mock
