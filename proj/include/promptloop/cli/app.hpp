#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "promptloop/cli/config.hpp"
#include "promptloop/clients/model_clients.hpp"
#include "promptloop/harness/ablation.hpp"
#include "promptloop/harness/manifest.hpp"
#include "promptloop/harness/report.hpp"
#include "promptloop/image/codec.hpp"
#include "promptloop/metrics/metric_report.hpp"
#include "promptloop/mock/mock_backend.hpp"
#include "promptloop/mock/mock_server.hpp"

namespace promptloop::cli {

enum exit_code : int { exit_ok = 0, exit_internal = 1, exit_input = 2, exit_backend = 3, exit_empty = 4 };

inline constexpr std::string_view mock_scheme = "mock://";

namespace detail {

inline std::atomic<bool>& stop_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

inline void on_stop_signal(int) { stop_flag() = true; }

inline std::string number_token(double v) {
    if (!std::isfinite(v))
        return promptloop::detail::non_finite_token(v);
    return nlohmann::json(v).dump();
}

inline mock::mock_behavior behavior_from(const settings& s) {
    const auto path = s.get("behavior_file");
    if (!path)
        return {};
    const auto bytes = read_file_bytes(*path);
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded())
        throw usage_error("behavior file " + *path + " is not valid JSON");
    return mock::mock_behavior::from_json(j);
}

inline bool is_mock(const settings& s, const std::string& key) {
    auto url = s.get(key);
    if (!url)
        url = s.get("endpoint");
    return url && url->rfind(mock_scheme, 0) == 0;
}

inline std::unique_ptr<prompter> make_prompter(const settings& s) {
    if (is_mock(s, "prompter"))
        return std::make_unique<mock::mock_prompter>(behavior_from(s));
    return std::make_unique<http_prompter>(endpoint_from(s, "prompter"));
}

inline std::unique_ptr<generator> make_generator(const settings& s) {
    if (is_mock(s, "generator"))
        return std::make_unique<mock::mock_generator>(behavior_from(s));
    return std::make_unique<http_generator>(endpoint_from(s, "generator"));
}

class unused_prompter final : public prompter {
public:
    prompt_pair request_prompts(const image_buffer&, const std::string&) const override {
        throw usage_error("no prompter is configured for this run");
    }
};

// Flag whose value lands in the settings flag layer under `key`.
inline CLI::Option* add_setting(CLI::App* cmd, settings& s, const std::string& flag, const std::string& key,
                                const std::string& help) {
    return cmd->add_option_function<std::string>(flag, [&s, key](const std::string& v) { s.flags[key] = v; }, help);
}

inline void add_metric_flags(CLI::App* cmd, settings& s) {
    for (const char* key : {"ssim_window", "ssim_sigma", "ssim_k1", "ssim_k2", "uiq_window", "fsim_scales",
                            "fsim_orientations", "fsim_min_wavelength", "fsim_mult", "fsim_sigma_f", "fsim_t1",
                            "fsim_t2", "psnr_max"}) {
        std::string flag = "--";
        for (const char* c = key; *c; ++c)
            flag += *c == '_' ? '-' : *c;
        add_setting(cmd, s, flag, key, "metric override")->group("Metrics");
    }
}

inline void add_endpoint_flags(CLI::App* cmd, settings& s) {
    add_setting(cmd, s, "--timeout", "timeout", "per-request timeout in seconds")->group("Backend");
    add_setting(cmd, s, "--retries", "retries", "retries after a failed request")->group("Backend");
    add_setting(cmd, s, "--token", "token", "bearer token sent to the services")->group("Backend");
    add_setting(cmd, s, "--concurrency", "concurrency", "maximum requests in flight")->group("Backend");
    add_setting(cmd, s, "--behavior-file", "behavior_file", "behavior JSON for mock:// endpoints")->group("Backend");
}

inline void print_prompts(std::ostream& out, const prompt_pair& p, bool raw) {
    out << "Prompt: " << p.positive << "\n";
    out << "Negative prompt: " << p.negative << "\n";
    if (raw)
        out << "\nRaw response:\n" << p.raw_response << "\n";
}

} // namespace detail

/// Entry point shared by the executable and the tests. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    settings s;
    std::string config_path;
    CLI::App app("Image-to-image prompting experiments: similarity metrics, model clients, mocks and ablations.",
                 "promptloop");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", config_path, "TOML-style key = value settings file (or PROMPTLOOP_CONFIG)");

    // compare
    std::string ref_path, cand_path;
    auto* compare = app.add_subcommand("compare", "Compute all six similarity metrics for an image pair");
    compare->add_option("reference", ref_path, "reference image")->required();
    compare->add_option("candidate", cand_path, "candidate image")->required();
    detail::add_setting(compare, s, "--format", "format", "text or json");
    detail::add_metric_flags(compare, s);

    // prompt
    std::string prompt_image;
    bool raw = false;
    auto* prompt = app.add_subcommand("prompt", "Ask the vision-language service for a prompt pair");
    prompt->add_option("image", prompt_image, "input image")->required();
    detail::add_setting(prompt, s, "--endpoint", "prompter", "prompter base URL or mock://");
    detail::add_setting(prompt, s, "--instruction", "instruction", "instruction sent with the image");
    prompt->add_flag("--raw", raw, "also print the verbatim reply");
    detail::add_endpoint_flags(prompt, s);

    // generate
    std::string gen_image, gen_out;
    std::optional<std::string> positive, negative;
    bool auto_prompt = false;
    auto* generate = app.add_subcommand("generate", "Run one img2img generation");
    generate->add_option("image", gen_image, "initial image")->required();
    generate->add_option("--out,-o", gen_out, "where to write the generated image")->required();
    detail::add_setting(generate, s, "--endpoint", "generator", "generator base URL or mock://");
    detail::add_setting(generate, s, "--prompter", "prompter", "prompter base URL used by --auto-prompt");
    generate->add_option("--prompt", positive, "positive prompt");
    generate->add_option("--negative", negative, "negative prompt");
    generate->add_flag("--auto-prompt", auto_prompt, "fetch the prompt pair from the prompter first");
    detail::add_setting(generate, s, "--instruction", "instruction", "instruction used by --auto-prompt");
    detail::add_setting(generate, s, "--strength", "strength", "denoising strength in (0, 1]");
    detail::add_setting(generate, s, "--steps", "steps", "sampler steps");
    detail::add_setting(generate, s, "--guidance", "guidance", "classifier-free guidance scale");
    detail::add_setting(generate, s, "--seed", "seed", "generation seed");
    detail::add_endpoint_flags(generate, s);

    // ablate
    std::string manifest_path;
    auto* ablate = app.add_subcommand("ablate", "Run the with/without prompt ablation over a manifest");
    ablate->add_option("manifest", manifest_path, "manifest JSON")->required();
    detail::add_setting(ablate, s, "--prompter", "prompter", "prompter base URL or mock://");
    detail::add_setting(ablate, s, "--generator", "generator", "generator base URL or mock://");
    detail::add_setting(ablate, s, "--out,-o", "out", "output directory");
    detail::add_setting(ablate, s, "--conditions", "conditions", "comma list of no_prompt,with_prompt");
    detail::add_setting(ablate, s, "--seed", "seed", "master seed, replacing the manifest's");
    detail::add_setting(ablate, s, "--instruction", "instruction", "instruction, replacing the manifest's");
    detail::add_setting(ablate, s, "--strength", "strength", "denoising strength in (0, 1]");
    detail::add_setting(ablate, s, "--steps", "steps", "sampler steps");
    detail::add_setting(ablate, s, "--guidance", "guidance", "classifier-free guidance scale");
    detail::add_endpoint_flags(ablate, s);
    detail::add_metric_flags(ablate, s);

    // mock-serve
    std::string host = "127.0.0.1";
    int port = 8765;
    auto* serve = app.add_subcommand("mock-serve", "Serve both endpoints with the deterministic mocks");
    serve->add_option("--host", host, "bind address")->capture_default_str();
    serve->add_option("--port", port, "listen port, 0 picks a free one")->capture_default_str();
    detail::add_setting(serve, s, "--behavior-file", "behavior_file", "mock behavior JSON");
    detail::add_setting(serve, s, "--token", "token", "require this bearer token");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_input;
    }

    try {
        if (config_path.empty())
            if (const char* env = std::getenv("PROMPTLOOP_CONFIG"))
                config_path = env;
        if (!config_path.empty())
            s.load_file(config_path);

        if (compare->parsed()) {
            const auto cfg = metric_config_from(s);
            const auto format = s.get_or("format", "text");
            if (format != "text" && format != "json")
                throw usage_error("--format must be text or json");
            const auto a = load_image(ref_path);
            const auto b = load_image(cand_path);
            const auto report = compare_all(a, b, cfg);
            if (format == "json") {
                nlohmann::json j = promptloop::detail::metrics_to_json(report);
                out << j.dump(2) << "\n";
            } else {
                for (auto m : all_metrics) {
                    char label[16];
                    std::snprintf(label, sizeof label, "%-6s", std::string(metric_name(m)).c_str());
                    out << label << detail::number_token(report.get(m)) << "\n";
                }
            }
            return exit_ok;
        }

        if (prompt->parsed()) {
            const auto image = load_image(prompt_image);
            const auto p = detail::make_prompter(s);
            const auto pair = p->request_prompts(image, s.get_or("instruction", default_instruction));
            detail::print_prompts(out, pair, raw);
            return exit_ok;
        }

        if (generate->parsed()) {
            if (auto_prompt && (positive || negative))
                throw usage_error("--auto-prompt cannot be combined with --prompt/--negative");
            const auto params = generation_params_from(s);
            const auto image = load_image(gen_image);
            std::optional<prompt_pair> prompts;
            if (auto_prompt) {
                prompts = detail::make_prompter(s)->request_prompts(image, s.get_or("instruction", default_instruction));
                detail::print_prompts(out, *prompts, false);
            } else if (positive || negative) {
                prompts = prompt_pair{positive.value_or(""), negative.value_or(""), {}};
            }
            const auto result = detail::make_generator(s)->generate_image(image, prompts, params);
            save_image(gen_out, result);
            out << "wrote " << gen_out << " (" << result.shape_string() << ")\n";
            return exit_ok;
        }

        if (ablate->parsed()) {
            auto m = load_manifest(manifest_path);
            if (auto c = s.get("conditions"))
                m.conditions = parse_conditions(*c);
            if (auto seed = s.number<std::uint64_t>("seed"))
                m.master_seed = *seed;
            if (auto instr = s.get("instruction"))
                m.instruction = *instr;
            m.params = generation_params_from(s, m.params, false);
            m.validate();
            const auto cfg = metric_config_from(s);
            const auto out_dir = s.get("out");
            if (!out_dir || out_dir->empty())
                throw usage_error("ablate needs an output directory (--out)");
            ablation_options opts;
            opts.out_dir = *out_dir;
            if (auto c = s.number<std::size_t>("concurrency"))
                opts.concurrency = *c;

            const bool needs_prompter =
                std::find(m.conditions.begin(), m.conditions.end(), condition::with_prompt) != m.conditions.end();
            std::unique_ptr<prompter> p =
                needs_prompter ? detail::make_prompter(s) : std::make_unique<detail::unused_prompter>();
            const auto g = detail::make_generator(s);
            const auto summary = run_ablation(m, *p, *g, cfg, opts);
            write_reports(summary, opts.out_dir);
            out << emit_report(summary, report_format::markdown);
            for (const auto& f : summary.failures)
                err << "warning: " << f.image_id << "/" << condition_name(f.cond) << " failed: " << f.message << "\n";
            return exit_ok;
        }

        if (serve->parsed()) {
            mock::server_options opts;
            if (auto t = s.get("token"); t && !t->empty())
                opts.required_token = *t;
            opts.log = &out;
            mock::mock_server server(detail::behavior_from(s), opts);
            detail::stop_flag() = false;
            auto prev_int = std::signal(SIGINT, detail::on_stop_signal);
            auto prev_term = std::signal(SIGTERM, detail::on_stop_signal);
            try {
                server.start(host, port);
            } catch (...) {
                std::signal(SIGINT, prev_int);
                std::signal(SIGTERM, prev_term);
                throw;
            }
            out << "listening on " << server.base_url() << std::endl;
            while (!detail::stop_flag())
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            server.stop();
            std::signal(SIGINT, prev_int);
            std::signal(SIGTERM, prev_term);
            out << "stopped" << std::endl;
            return exit_ok;
        }
    } catch (const run_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_empty;
    } catch (const backend_unreachable_error& e) {
        err << "backend error: " << e.what() << "\n";
        return exit_backend;
    } catch (const backend_rejected_error& e) {
        err << "backend error: " << e.what() << "\n";
        return exit_backend;
    } catch (const parse_error& e) {
        err << "backend error: " << e.what() << "\n";
        return exit_backend;
    } catch (const payload_error& e) {
        err << "backend error: " << e.what() << "\n";
        return exit_backend;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_input;
}

} // namespace promptloop::cli
