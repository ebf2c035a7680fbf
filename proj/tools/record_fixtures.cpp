// Records wire exchanges against the mock server into JSON fixture files.
// usage: record_fixtures <output-dir>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <vector>

#include "promptloop/clients/model_clients.hpp"
#include "promptloop/clients/wire.hpp"
#include "promptloop/mock/mock_server.hpp"

using namespace promptloop;

namespace {

image_buffer tiny_image() {
    std::vector<double> s(6 * 4 * 3);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = static_cast<double>((i * 37) % 256) / 255.0;
    return image_buffer(6, 4, 3, std::move(s));
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: record_fixtures <output-dir>\n";
        return 2;
    }
    const std::filesystem::path out_dir = argv[1];
    std::filesystem::create_directories(out_dir);

    std::mutex mu;
    std::vector<mock::exchange> log;
    mock::server_options opts;
    opts.recorder = [&](const mock::exchange& e) {
        std::lock_guard lock(mu);
        log.push_back(e);
    };
    mock::mock_server server({}, opts);
    server.start();

    backend_endpoint ep;
    ep.base_url = server.base_url();
    ep.max_retries = 0;
    const auto img = tiny_image();
    http_prompter prompter(ep);
    http_generator gen(ep);
    const auto pair = prompter.request_prompts(img, default_instruction);
    generation_params seeded;
    seeded.seed = 42;
    gen.generate_image(img, pair, seeded);
    gen.generate_image(img, std::nullopt, {});

    httplib::Client raw("127.0.0.1", server.port());
    auto bad = wire::img2img_request{wire::image_to_png_b64(img), "p", "n", {}}.to_json();
    bad.erase("seed");
    raw.Post(wire::img2img_path, bad.dump(), "application/json");
    server.stop();

    const char* names[] = {"prompts_ok", "img2img_with_prompt", "img2img_no_prompt", "img2img_missing_seed"};
    if (log.size() != std::size(names)) {
        std::cerr << "expected " << std::size(names) << " exchanges, got " << log.size() << "\n";
        return 1;
    }
    for (std::size_t i = 0; i < log.size(); ++i) {
        nlohmann::json j = {{"endpoint", log[i].path},
                            {"status", log[i].status},
                            {"request", nlohmann::json::parse(log[i].request_body)},
                            {"response", nlohmann::json::parse(log[i].response_body)}};
        std::ofstream(out_dir / (std::string(names[i]) + ".json")) << j.dump(2) << "\n";
    }
    std::cout << "wrote " << log.size() << " fixtures to " << out_dir << "\n";
    return 0;
}
