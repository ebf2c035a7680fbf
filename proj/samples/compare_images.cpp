// Compares two images on all six metrics, or a built-in gradient pair when run without arguments.
//   sample_compare_images [reference candidate]

#include <cstdio>
#include <exception>
#include <vector>

#include "promptloop/image/codec.hpp"
#include "promptloop/metrics/metric_report.hpp"

using namespace promptloop;

static image_buffer gradient(std::size_t w, std::size_t h, double offset) {
    std::vector<double> s(w * h * 3);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = 0.2 + 0.6 * static_cast<double>(x + y) / static_cast<double>(w + h) + offset * c;
                s[(y * w + x) * 3 + c] = v > 1.0 ? 1.0 : v;
            }
    return image_buffer(w, h, 3, std::move(s));
}

int main(int argc, char** argv) {
    try {
        image_buffer ref, cand;
        if (argc == 3) {
            ref = load_image(argv[1]);
            cand = load_image(argv[2]);
        } else {
            ref = gradient(96, 64, 0.0);
            cand = gradient(96, 64, 0.01);
        }
        const auto report = compare_all(ref, cand);
        std::printf("%s vs %s\n", ref.shape_string().c_str(), cand.shape_string().c_str());
        for (auto m : all_metrics)
            std::printf("  %-5s %s %.6f\n", std::string(metric_label(m)).c_str(), lower_is_better(m) ? "(lower) " : "(higher)",
                        report.get(m));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
