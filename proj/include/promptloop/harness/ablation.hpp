#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "promptloop/clients/model_clients.hpp"
#include "promptloop/error.hpp"
#include "promptloop/harness/manifest.hpp"
#include "promptloop/image/codec.hpp"
#include "promptloop/metrics/metric_report.hpp"

namespace promptloop {

struct ablation_record {
    std::string image_id;
    condition cond = condition::no_prompt;
    std::optional<prompt_pair> prompts;
    metric_report metrics;
    std::filesystem::path generated_path; // relative to the output directory

    bool has_infinite() const { return metrics.has_infinite(); }

    friend bool operator==(const ablation_record&, const ablation_record&) = default;
};

struct ablation_failure {
    std::string image_id;
    condition cond = condition::no_prompt;
    std::string message;

    friend bool operator==(const ablation_failure&, const ablation_failure&) = default;
};

struct condition_means {
    std::array<std::optional<double>, 6> mean{};
    std::array<std::size_t, 6> finite_count{};

    std::optional<double> get(metric_id m) const { return mean[static_cast<std::size_t>(m)]; }

    friend bool operator==(const condition_means&, const condition_means&) = default;
};

struct ablation_summary {
    std::vector<condition> conditions;
    std::vector<ablation_record> records;
    std::vector<ablation_failure> failures;
    std::map<condition, condition_means> means;
    std::array<std::size_t, 6> wins{}; // with_prompt strictly better than no_prompt
    std::size_t paired_images = 0;
    double psnr_max = 1.0;

    bool partial() const { return !failures.empty(); }
    std::size_t win_count(metric_id m) const { return wins[static_cast<std::size_t>(m)]; }

    const ablation_record* find(const std::string& id, condition c) const {
        for (const auto& r : records)
            if (r.image_id == id && r.cond == c)
                return &r;
        return nullptr;
    }

    /// Image ids in first-appearance order.
    std::vector<std::string> image_ids() const {
        std::vector<std::string> ids;
        for (const auto& r : records)
            if (std::find(ids.begin(), ids.end(), r.image_id) == ids.end())
                ids.push_back(r.image_id);
        return ids;
    }

    friend bool operator==(const ablation_summary&, const ablation_summary&) = default;
};

/// Builds means and win counts from records. Non-finite values never enter a mean.
inline ablation_summary summarize(std::vector<ablation_record> records, std::vector<condition> conditions,
                                  std::vector<ablation_failure> failures = {}, double psnr_max = 1.0) {
    ablation_summary s;
    s.conditions = std::move(conditions);
    s.records = std::move(records);
    s.failures = std::move(failures);
    s.psnr_max = psnr_max;
    for (auto c : s.conditions) {
        condition_means cm;
        for (auto m : all_metrics) {
            const auto k = static_cast<std::size_t>(m);
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& r : s.records) {
                const double v = r.metrics.get(m);
                if (r.cond == c && std::isfinite(v)) {
                    sum += v;
                    ++n;
                }
            }
            cm.finite_count[k] = n;
            if (n > 0)
                cm.mean[k] = sum / static_cast<double>(n);
        }
        s.means[c] = cm;
    }
    for (const auto& id : s.image_ids()) {
        const auto* with = s.find(id, condition::with_prompt);
        const auto* without = s.find(id, condition::no_prompt);
        if (!with || !without)
            continue;
        ++s.paired_images;
        for (auto m : all_metrics)
            if (is_better(m, with->metrics.get(m), without->metrics.get(m)))
                ++s.wins[static_cast<std::size_t>(m)];
    }
    return s;
}

struct ablation_options {
    std::filesystem::path out_dir; // empty: generated images are not written
    std::size_t concurrency = 4;
};

namespace detail {

struct image_outcome {
    std::vector<ablation_record> records;
    std::vector<ablation_failure> failures;
};

inline image_outcome run_image(const manifest& m, std::size_t index, std::uint64_t seed, const prompter& p,
                               const generator& g, const metric_config& cfg, const ablation_options& opts) {
    image_outcome out;
    const auto& entry = m.entries[index];
    image_buffer input;
    try {
        input = load_image(entry.path);
    } catch (const std::exception& e) {
        for (auto c : m.conditions)
            out.failures.push_back({entry.id, c, e.what()});
        return out;
    }
    auto params = m.params;
    params.seed = seed;
    for (auto c : m.conditions) {
        try {
            ablation_record rec;
            rec.image_id = entry.id;
            rec.cond = c;
            if (c == condition::with_prompt)
                rec.prompts = p.request_prompts(input, m.instruction);
            const auto generated = g.generate_image(input, rec.prompts, params);
            if (!generated.same_shape(input))
                throw shape_error("generated image is " + generated.shape_string() + " but input is " +
                                  input.shape_string());
            rec.metrics = compare_all(input, generated, cfg);
            rec.generated_path = std::filesystem::path(entry.id) / (std::string(condition_name(c)) + ".png");
            if (!opts.out_dir.empty())
                save_image(opts.out_dir / rec.generated_path, generated);
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.failures.push_back({entry.id, c, e.what()});
        }
    }
    return out;
}

} // namespace detail

/// Runs every manifest image under every selected condition and assembles a summary.
/// Images run concurrently up to opts.concurrency; the conditions of one image run in order.
inline ablation_summary run_ablation(const manifest& m, const prompter& p, const generator& g,
                                     const metric_config& cfg = {}, const ablation_options& opts = {}) {
    m.validate();
    cfg.validate();
    if (opts.concurrency == 0)
        throw precondition_error("concurrency must be at least 1");
    const auto seeds = m.image_seeds();
    std::vector<detail::image_outcome> outcomes(m.entries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < m.entries.size(); i = next++)
            outcomes[i] = detail::run_image(m, i, seeds[i], p, g, cfg, opts);
    };
    const auto n_threads = std::min(opts.concurrency, m.entries.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    std::vector<ablation_record> records;
    std::vector<ablation_failure> failures;
    for (auto& o : outcomes) {
        std::move(o.records.begin(), o.records.end(), std::back_inserter(records));
        std::move(o.failures.begin(), o.failures.end(), std::back_inserter(failures));
    }
    if (records.empty()) {
        std::string msg = "no image produced a result";
        if (!failures.empty())
            msg += " (first failure: " + failures.front().image_id + "/" +
                   std::string(condition_name(failures.front().cond)) + ": " + failures.front().message + ")";
        throw run_error(msg);
    }
    return summarize(std::move(records), m.conditions, std::move(failures), cfg.psnr_max);
}

} // namespace promptloop
