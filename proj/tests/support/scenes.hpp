#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "promptloop/harness/ablation.hpp"
#include "promptloop/image/codec.hpp"
#include "support/test_images.hpp"

namespace promptloop::testing {

// Scratch directory removed on destruction.
class temp_dir {
public:
    explicit temp_dir(const std::string& tag = "promptloop") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~temp_dir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    temp_dir(const temp_dir&) = delete;
    temp_dir& operator=(const temp_dir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline const std::vector<std::string>& scene_ids() {
    static const std::vector<std::string> ids = {"dog", "astronaut", "plane", "skyscraper"};
    return ids;
}

// Writes one synthetic PNG per scene id plus manifest.json; returns the manifest path.
inline std::filesystem::path write_scene_manifest(const std::filesystem::path& dir, std::uint64_t master_seed = 2024,
                                                  std::size_t size = 96) {
    nlohmann::json images = nlohmann::json::array();
    std::uint64_t seed = 11;
    std::filesystem::create_directories(dir / "inputs");
    for (const auto& id : scene_ids()) {
        save_image(dir / "inputs" / (id + ".png"), landscape_image(size, size, seed++));
        images.push_back({{"id", id}, {"path", "inputs/" + id + ".png"}});
    }
    nlohmann::json m = {{"master_seed", master_seed},
                        {"instruction", default_instruction},
                        {"params", {{"strength", 0.6}, {"steps", 30}, {"guidance", 7.5}}},
                        {"images", images}};
    const auto path = dir / "manifest.json";
    std::ofstream(path) << m.dump(2) << "\n";
    return path;
}

inline std::string read_text(const std::filesystem::path& p) {
    const auto bytes = read_file_bytes(p);
    return std::string(bytes.begin(), bytes.end());
}

inline ablation_record make_record(const std::string& id, condition c, metric_report m) {
    ablation_record r;
    r.image_id = id;
    r.cond = c;
    r.metrics = m;
    if (c == condition::with_prompt)
        r.prompts = prompt_pair{"p", "n", "Prompt: p\nNegative prompt: n"};
    r.generated_path = std::filesystem::path(id) / (std::string(condition_name(c)) + ".png");
    return r;
}

// Rows transcribed from the published result tables.
inline ablation_summary published_means() {
    return summarize({make_record("scene", condition::no_prompt, {0.01931, 34.2736, 0.28770, 0.78507, 0.03133, 48.7848}),
                      make_record("scene", condition::with_prompt, {0.01008, 39.8750, 0.36375, 0.92199, 0.07616, 51.6555})},
                     {condition::no_prompt, condition::with_prompt});
}

inline ablation_summary published_scenes() {
    return summarize(
        {make_record("dog", condition::no_prompt, {0.01952, 34.1125, 0.28610, 0.78434, 0.00179, 52.8297}),
         make_record("dog", condition::with_prompt, {0.01265, 37.9437, 0.39774, 0.88115, 0.05121, 55.0153}),
         make_record("astronaut", condition::no_prompt, {0.01798, 34.9009, 0.27823, 0.79330, 0.00104, 51.0724}),
         make_record("astronaut", condition::with_prompt, {0.01262, 37.9785, 0.30214, 0.88230, 0.02420, 52.6086}),
         make_record("plane", condition::no_prompt, {0.01275, 37.7418, 0.31769, 0.92368, 0.00861, 53.8197}),
         make_record("plane", condition::with_prompt, {0.00767, 42.2708, 0.40353, 0.96597, 0.10995, 55.7809}),
         make_record("skyscraper", condition::no_prompt, {0.02603, 31.6809, 0.27245, 0.58362, -0.00236, 43.1745}),
         make_record("skyscraper", condition::with_prompt, {0.01839, 34.6985, 0.31015, 0.74276, 0.03159, 44.6849})},
        {condition::no_prompt, condition::with_prompt});
}

} // namespace promptloop::testing
