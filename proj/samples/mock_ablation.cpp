// Runs a small with/without-prompt ablation against an in-process mock HTTP server
// and prints the markdown report.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "promptloop/clients/model_clients.hpp"
#include "promptloop/harness/ablation.hpp"
#include "promptloop/harness/report.hpp"
#include "promptloop/mock/mock_server.hpp"

using namespace promptloop;

static image_buffer scene(std::size_t size, double phase) {
    std::vector<double> s(size * size * 3);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double u = static_cast<double>(x) / size, v = static_cast<double>(y) / size;
            const double t = 0.5 + 0.4 * std::sin(12.0 * u + phase) * std::cos(9.0 * v - phase);
            s[(y * size + x) * 3] = t;
            s[(y * size + x) * 3 + 1] = 0.3 + 0.4 * v;
            s[(y * size + x) * 3 + 2] = 1.0 - t;
        }
    return image_buffer(size, size, 3, std::move(s));
}

int main() {
    const auto dir = std::filesystem::temp_directory_path() / "promptloop-sample";
    std::filesystem::create_directories(dir);

    manifest m;
    m.master_seed = 7;
    for (const char* id : {"dog", "plane"}) {
        const auto path = dir / (std::string(id) + ".png");
        save_image(path, scene(64, id[0] * 0.1));
        m.entries.push_back({id, path});
    }

    mock::mock_server server;
    server.start();
    backend_endpoint ep;
    ep.base_url = server.base_url();
    http_prompter prompter(ep);
    http_generator generator(ep);

    const auto summary = run_ablation(m, prompter, generator, {}, {dir / "out", 2});
    std::cout << emit_report(summary, report_format::markdown);
    std::printf("\ngenerated images under %s\n", (dir / "out").c_str());
    return 0;
}
