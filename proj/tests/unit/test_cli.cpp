#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "promptloop/cli/app.hpp"
#include "support/process.hpp"
#include "support/scenes.hpp"
#include "support/servers.hpp"

using namespace promptloop;
using namespace promptloop::testing;
using nlohmann::json;

namespace {

struct cli_result {
    int code;
    std::string out;
    std::string err;
};

cli_result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "promptloop");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> parse_text_metrics(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string name, value;
    while (in >> name >> value)
        out[name] = value;
    return out;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class env_guard {
public:
    env_guard(const char* name, const char* value) : name_(name) {
        if (const char* old = std::getenv(name))
            old_ = old;
        ::setenv(name, value, 1);
    }
    ~env_guard() {
        if (old_)
            ::setenv(name_.c_str(), old_->c_str(), 1);
        else
            ::unsetenv(name_.c_str());
    }

private:
    std::string name_;
    std::optional<std::string> old_;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto base = landscape_image(64, 64, 5);
        save_image(dir / "a.png", base);
        save_image(dir / "b.png", add_noise(base, gaussian_field(base.samples().size(), 3), 0.03));
        save_image(dir / "narrow.png", landscape_image(40, 64, 5));
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }

    temp_dir dir{"promptloop-cli"};
};

} // namespace

TEST_F(CliTest, CompareIdenticalImages) {
    const auto r = invoke({"compare", path("a.png"), path("a.png")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = parse_text_metrics(r.out);
    EXPECT_EQ(m.at("rmse"), "0.0");
    EXPECT_EQ(m.at("psnr"), "inf");
    EXPECT_EQ(m.at("sre"), "inf");
    EXPECT_NEAR(std::stod(m.at("ssim")), 1.0, 1e-12);
    EXPECT_NEAR(std::stod(m.at("fsim")), 1.0, 1e-12);
    EXPECT_NEAR(std::stod(m.at("uiq")), 1.0, 1e-12);
}

TEST_F(CliTest, CompareJsonMatchesText) {
    const auto text = invoke({"compare", path("a.png"), path("b.png")});
    const auto js = invoke({"compare", path("a.png"), path("b.png"), "--format", "json"});
    ASSERT_EQ(text.code, 0);
    ASSERT_EQ(js.code, 0);
    const auto j = json::parse(js.out);
    const auto m = parse_text_metrics(text.out);
    ASSERT_EQ(j.size(), 6u);
    for (auto metric : all_metrics) {
        const std::string key(metric_name(metric));
        EXPECT_EQ(std::stod(m.at(key)), j.at(key).get<double>()) << key;
    }
    const auto direct = compare_all(load_image(path("a.png")), load_image(path("b.png")));
    EXPECT_EQ(j.at("ssim").get<double>(), direct.ssim);
}

TEST_F(CliTest, CompareShapeMismatchNamesBothShapes) {
    const auto r = invoke({"compare", path("a.png"), path("narrow.png")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("64x64x3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("40x64x3"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, CompareInputErrors) {
    EXPECT_EQ(invoke({"compare", path("a.png"), path("missing.png")}).code, 2);
    std::ofstream(dir / "junk.png") << "not an image";
    const auto junk = invoke({"compare", path("a.png"), path("junk.png")});
    EXPECT_EQ(junk.code, 2);
    EXPECT_NE(junk.err.find("offset"), std::string::npos) << junk.err;
    EXPECT_EQ(invoke({"compare", path("a.png")}).code, 2);
    EXPECT_EQ(invoke({"compare", path("a.png"), path("a.png"), "--format", "yaml"}).code, 2);
    EXPECT_EQ(invoke({"compare", path("a.png"), path("a.png"), "--ssim-window", "1"}).code, 2);
    EXPECT_EQ(invoke({"compare", path("a.png"), path("a.png"), "--ssim-sigma", "abc"}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
}

TEST_F(CliTest, HelpExitsCleanly) {
    const auto r = invoke({"--help"});
    EXPECT_EQ(r.code, 0);
    for (const char* sub : {"compare", "prompt", "generate", "ablate", "mock-serve"})
        EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST_F(CliTest, SettingsPrecedence) {
    auto psnr_with = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = {"compare", path("a.png"), path("b.png"), "--format", "json"};
        args.insert(args.end(), extra.begin(), extra.end());
        const auto r = invoke(args);
        EXPECT_EQ(r.code, 0) << r.err;
        return json::parse(r.out).at("psnr").get<double>();
    };
    const double base = psnr_with({});
    std::ofstream(dir / "settings.toml") << "# metrics\n[metrics]\npsnr_max = 2  # doubled\n";
    const auto cfg = path("settings.toml");
    EXPECT_NEAR(psnr_with({"--config", cfg}) - base, 20 * std::log10(2.0), 1e-9);
    {
        env_guard env("PROMPTLOOP_PSNR_MAX", "4");
        EXPECT_NEAR(psnr_with({"--config", cfg}) - base, 20 * std::log10(4.0), 1e-9);
        EXPECT_NEAR(psnr_with({"--config", cfg, "--psnr-max", "8"}) - base, 20 * std::log10(8.0), 1e-9);
    }
    {
        env_guard env("PROMPTLOOP_CONFIG", cfg.c_str());
        EXPECT_NEAR(psnr_with({}) - base, 20 * std::log10(2.0), 1e-9);
    }
    {
        env_guard env("PROMPTLOOP_PSNR_MAX", "-1");
        const auto r = invoke({"compare", path("a.png"), path("b.png")});
        EXPECT_EQ(r.code, 2);
        env_guard bad("PROMPTLOOP_SSIM_K1", "x");
        const auto r2 = invoke({"compare", path("a.png"), path("b.png")});
        EXPECT_EQ(r2.code, 2);
        EXPECT_NE(r2.err.find("PROMPTLOOP_SSIM_K1"), std::string::npos) << r2.err;
    }
    std::ofstream(dir / "typo.toml") << "psnr_maks = 2\n";
    EXPECT_EQ(invoke({"compare", path("a.png"), path("b.png"), "--config", path("typo.toml")}).code, 2);
    EXPECT_EQ(invoke({"compare", path("a.png"), path("b.png"), "--config", path("absent.toml")}).code, 2);
}

TEST(CliConfig, ParsesKeyValueText) {
    const auto m = cli::parse_config_text("[backend]\nprompter = \"http://h:1/#x\"\nfsim-t1 = 0.9\n\n# c\n", "t");
    EXPECT_EQ(m.at("prompter"), "http://h:1/#x");
    EXPECT_EQ(m.at("fsim_t1"), "0.9");
    EXPECT_THROW(cli::parse_config_text("no equals sign\n", "t"), cli::usage_error);
}

TEST_F(CliTest, PromptAgainstMockIsDeterministic) {
    const auto a = invoke({"prompt", path("a.png"), "--endpoint", "mock://"});
    const auto b = invoke({"prompt", path("a.png"), "--endpoint", "mock://"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("Prompt: ", 0), 0u);
    EXPECT_NE(a.out.find("\nNegative prompt: "), std::string::npos);
    EXPECT_EQ(a.out.find("Raw response"), std::string::npos);

    const auto raw = invoke({"prompt", path("a.png"), "--endpoint", "mock://", "--raw"});
    const auto reply = mock::mock_prompts(load_image(path("a.png")), default_instruction, {});
    EXPECT_NE(raw.out.find(reply), std::string::npos) << raw.out;

    const auto other = invoke({"prompt", path("a.png"), "--endpoint", "mock://", "--raw", "--instruction", "Describe."});
    EXPECT_NE(other.out.find("# instruction: Describe."), std::string::npos);
}

TEST_F(CliTest, PromptBackendErrorsExitThree) {
    const auto url = "http://127.0.0.1:" + std::to_string(closed_port());
    const auto start = std::chrono::steady_clock::now();
    const auto r = invoke({"prompt", path("a.png"), "--endpoint", url, "--timeout", "1", "--retries", "1"});
    EXPECT_EQ(r.code, 3);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
    EXPECT_NE(r.err.find("unreachable"), std::string::npos) << r.err;

    scripted_server garbage([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"response": "   "})", "application/json");
    });
    EXPECT_EQ(invoke({"prompt", path("a.png"), "--endpoint", garbage.url()}).code, 3);

    scripted_server rejecting([](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content(R"({"error": "nope"})", "application/json");
    });
    EXPECT_EQ(invoke({"prompt", path("a.png"), "--endpoint", rejecting.url()}).code, 3);
    EXPECT_EQ(invoke({"prompt", path("a.png")}).code, 2);
}

TEST_F(CliTest, GenerateWritesImage) {
    const auto out = path("gen/out.png");
    const auto r = invoke({"generate", path("a.png"), "--endpoint", "mock://", "-o", out, "--prompt", "a road",
                           "--negative", "blur", "--seed", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto img = load_image(out);
    EXPECT_EQ(img.shape_string(), "64x64x3");
    generation_params params;
    params.seed = 4;
    const auto expected = mock::mock_generator{}.generate_image(load_image(path("a.png")),
                                                                prompt_pair{"a road", "blur", {}}, params);
    EXPECT_EQ(encode(img, image_format::png), encode(expected, image_format::png));

    const auto auto_out = path("gen/auto.png");
    const auto a = invoke({"generate", path("a.png"), "--endpoint", "mock://", "--prompter", "mock://", "--auto-prompt",
                           "-o", auto_out});
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.out.find("Prompt: "), std::string::npos);

    EXPECT_EQ(invoke({"generate", path("a.png"), "--endpoint", "mock://", "-o", out, "--auto-prompt", "--prompt", "x"})
                  .code,
              2);
    EXPECT_EQ(invoke({"generate", path("a.png"), "--endpoint", "mock://", "-o", out, "--strength", "0"}).code, 2);
    EXPECT_EQ(invoke({"generate", path("a.png"), "--endpoint", "mock://"}).code, 2);
}

TEST_F(CliTest, AblateAgainstMocks) {
    const auto manifest = write_scene_manifest(dir / "scenes", 2024, 64);
    const auto out = path("run");
    const auto r = invoke({"ablate", manifest.string(), "--prompter", "mock://", "--generator", "mock://", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = read_text(dir / "run" / "report.csv");
    EXPECT_EQ(count_lines(csv), 9u);
    EXPECT_EQ(csv.rfind("image_id,condition,rmse,psnr,fsim,ssim,uiq,sre\n", 0), 0u);
    for (const auto& id : scene_ids())
        for (const char* c : {"no_prompt", "with_prompt"})
            EXPECT_TRUE(std::filesystem::exists(dir / "run" / id / (std::string(c) + ".png"))) << id << c;

    // every with-prompt row bolds all six cells and no w/o-prompt cell is bold
    std::istringstream md(read_text(dir / "run" / "report.md"));
    int with_rows = 0;
    for (std::string line; std::getline(md, line);) {
        if (line.find("| with prompt |") != std::string::npos) {
            ++with_rows;
            std::size_t bold = 0;
            for (auto pos = line.find("**"); pos != std::string::npos; pos = line.find("**", pos + 2))
                ++bold;
            EXPECT_EQ(bold, 12u) << line;
        }
        if (line.find("| w/o prompt |") != std::string::npos) {
            EXPECT_EQ(line.find("**"), std::string::npos) << line;
        }
    }
    EXPECT_EQ(with_rows, 5);
    EXPECT_EQ(r.out, read_text(dir / "run" / "report.md"));
    const auto j = json::parse(read_text(dir / "run" / "report.json"));
    EXPECT_EQ(j["records"].size(), 8u);

    const auto again = invoke({"ablate", manifest.string(), "--prompter", "mock://", "--generator", "mock://", "--out",
                               path("run2")});
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(read_text(dir / "run2" / "report.csv"), csv);

    const auto reseeded = invoke({"ablate", manifest.string(), "--prompter", "mock://", "--generator", "mock://",
                                  "--out", path("run3"), "--seed", "1"});
    ASSERT_EQ(reseeded.code, 0);
    EXPECT_NE(read_text(dir / "run3" / "report.csv"), csv);
}

TEST_F(CliTest, AblateSingleCondition) {
    const auto manifest = write_scene_manifest(dir / "scenes", 2024, 48);
    env_guard gen("PROMPTLOOP_GENERATOR", "mock://");
    const auto r = invoke({"ablate", manifest.string(), "--conditions", "no_prompt", "--out", path("solo")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = read_text(dir / "solo" / "report.csv");
    EXPECT_EQ(count_lines(csv), 5u);
    EXPECT_EQ(csv.find("with_prompt"), std::string::npos);
    EXPECT_EQ(r.out.find("with prompt"), std::string::npos);
}

TEST_F(CliTest, AblateErrorCodes) {
    std::ofstream(dir / "bad.json") << R"({"images": [{"id": "x", "path": "a.png"}, {"id": "x", "path": "a.png"}]})";
    EXPECT_EQ(invoke({"ablate", path("bad.json"), "--generator", "mock://", "--prompter", "mock://", "--out", path("o")})
                  .code,
              2);
    std::ofstream(dir / "broken.json") << "{";
    EXPECT_EQ(invoke({"ablate", path("broken.json"), "--generator", "mock://", "--out", path("o")}).code, 2);
    std::ofstream(dir / "gone.json") << R"({"images": [{"id": "x", "path": "nowhere.png"}]})";
    const auto empty = invoke({"ablate", path("gone.json"), "--generator", "mock://", "--prompter", "mock://", "--out",
                               path("o")});
    EXPECT_EQ(empty.code, 4);
    std::ofstream(dir / "ok.json") << R"({"images": [{"id": "x", "path": "a.png"}]})";
    EXPECT_EQ(invoke({"ablate", path("ok.json"), "--generator", "mock://", "--prompter", "mock://"}).code, 2);
    EXPECT_EQ(invoke({"ablate", path("ok.json"), "--generator", "mock://", "--prompter", "mock://", "--out", path("o"),
                      "--conditions", "sometimes"})
                  .code,
              2);

    std::ofstream(dir / "half.json")
        << R"({"images": [{"id": "x", "path": "a.png"}, {"id": "y", "path": "nowhere.png"}]})";
    const auto partial = invoke({"ablate", path("half.json"), "--generator", "mock://", "--prompter", "mock://",
                                 "--out", path("half")});
    EXPECT_EQ(partial.code, 0);
    EXPECT_NE(partial.err.find("warning: y/"), std::string::npos) << partial.err;
    EXPECT_NE(partial.out.find("Partial run"), std::string::npos);
}

TEST_F(CliTest, MockServeProcess) {
    child_process server({PROMPTLOOP_CLI_PATH, "mock-serve", "--port", "0"});
    const auto banner = server.read_line();
    ASSERT_EQ(banner.rfind("listening on http://127.0.0.1:", 0), 0u) << banner;
    const auto url = banner.substr(std::string("listening on ").size());
    const auto port = std::stoi(url.substr(url.rfind(':') + 1));

    httplib::Client probe("127.0.0.1", port);
    const auto health = probe.Get("/healthz");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(server.read_line(), "GET /healthz 200 15B");

    child_process busy({PROMPTLOOP_CLI_PATH, "mock-serve", "--port", std::to_string(port)});
    EXPECT_EQ(busy.wait(), 2);

    const auto manifest = write_scene_manifest(dir / "scenes", 7, 48);
    const auto r = invoke({"ablate", manifest.string(), "--prompter", url, "--generator", url, "--out", path("http")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(read_text(dir / "http" / "report.json"));
    for (auto metric : all_metrics)
        EXPECT_EQ(j["wins"][std::string(metric_name(metric))], 4) << metric_name(metric);
    EXPECT_EQ(server.read_line().rfind("POST /v1/", 0), 0u);

    server.signal(SIGINT);
    EXPECT_EQ(server.wait(), 0);
}

TEST_F(CliTest, MockServeRejectsEqualNoiseLevels) {
    std::ofstream(dir / "behavior.json") << R"({"noise_with_prompt": 0.05, "noise_without_prompt": 0.05})";
    child_process server({PROMPTLOOP_CLI_PATH, "mock-serve", "--port", "0", "--behavior-file", path("behavior.json")});
    EXPECT_EQ(server.wait(), 2);
    std::ofstream(dir / "typo.json") << R"({"noise": 0.01})";
    child_process typo({PROMPTLOOP_CLI_PATH, "mock-serve", "--port", "0", "--behavior-file", path("typo.json")});
    EXPECT_EQ(typo.wait(), 2);
}
