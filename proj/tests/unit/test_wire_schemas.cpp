#include <gtest/gtest.h>

#include <fstream>

#include "promptloop/clients/wire.hpp"
#include "promptloop/harness/manifest.hpp"
#include "support/schema_check.hpp"

using namespace promptloop;
using namespace promptloop::testing;
using nlohmann::json;

namespace {

schema_checker schema(const std::string& name) {
    return schema_checker::from_file(std::filesystem::path(PROMPTLOOP_SCHEMA_DIR) / (name + ".schema.json"));
}

json fixture(const std::string& name) {
    std::ifstream in(std::filesystem::path(PROMPTLOOP_FIXTURE_DIR) / (name + ".json"));
    return json::parse(in);
}

image_buffer small_image() { return image_buffer::filled(4, 3, 3, 0.25); }

} // namespace

TEST(WireSchema, BuiltBodiesConform) {
    const auto b64 = wire::image_to_png_b64(small_image());
    EXPECT_TRUE(schema("prompts_request").check(wire::prompts_request{b64, default_instruction}.to_json()).empty());
    EXPECT_TRUE(schema("prompts_response").check(wire::prompts_response{"Prompt: x"}.to_json()).empty());
    generation_params seeded;
    seeded.seed = 5;
    EXPECT_TRUE(schema("img2img_request").check(wire::img2img_request{b64, "", "", {}}.to_json()).empty());
    EXPECT_TRUE(schema("img2img_request").check(wire::img2img_request{b64, "a", "b", seeded}.to_json()).empty());
    EXPECT_TRUE(schema("img2img_response").check(wire::img2img_response{b64}.to_json()).empty());
    EXPECT_TRUE(schema("error").check(wire::error_body("boom")).empty());
}

TEST(WireSchema, SchemaAndParserAgreeOnMutations) {
    const auto good = wire::img2img_request{wire::image_to_png_b64(small_image()), "p", "n", {}}.to_json();
    const auto checker = schema("img2img_request");
    std::vector<json> bad;
    for (const char* key : {"init_png_b64", "prompt", "negative_prompt", "strength", "steps", "guidance", "seed"}) {
        auto missing = good;
        missing.erase(key);
        bad.push_back(missing);
    }
    auto extra = good;
    extra["sampler"] = "ddim";
    bad.push_back(extra);
    auto fractional = good;
    fractional["steps"] = 2.5;
    bad.push_back(fractional);
    auto text_seed = good;
    text_seed["seed"] = "7";
    bad.push_back(text_seed);
    auto negative_seed = good;
    negative_seed["seed"] = -1;
    bad.push_back(negative_seed);
    for (const auto& body : bad) {
        EXPECT_FALSE(checker.check(body).empty()) << body.dump();
        EXPECT_THROW(wire::img2img_request::from_json(body), wire::schema_error) << body.dump();
    }
    EXPECT_TRUE(checker.check(good).empty());
    EXPECT_NO_THROW(wire::img2img_request::from_json(good));
}

TEST(WireSchema, FixturesConform) {
    for (const char* name : {"prompts_ok", "img2img_with_prompt", "img2img_no_prompt", "img2img_missing_seed"}) {
        const auto f = fixture(name);
        const bool prompts = f["endpoint"] == wire::prompts_path;
        const std::string base = prompts ? "prompts" : "img2img";
        if (f["status"] == 200) {
            EXPECT_TRUE(schema(base + "_request").check(f["request"]).empty()) << name;
        }
        const auto resp = f["status"] == 200 ? schema(base + "_response") : schema("error");
        EXPECT_TRUE(resp.check(f["response"]).empty()) << name;
    }
    EXPECT_FALSE(schema("img2img_request").check(fixture("img2img_missing_seed")["request"]).empty());
}

TEST(WireSchema, CheckerReportsPaths) {
    const auto errs = schema("manifest").check(json{{"images", json::array({{{"id", ""}, {"path", 3}}})}});
    ASSERT_EQ(errs.size(), 2u);
    EXPECT_NE(errs[0].find("/images/0/id"), std::string::npos) << errs[0];
    EXPECT_NE(errs[1].find("/images/0/path"), std::string::npos) << errs[1];
}

TEST(WireSchema, ManifestSchemaMatchesLoader) {
    const json good = {{"master_seed", 3},
                       {"instruction", "Describe."},
                       {"params", {{"strength", 0.5}, {"steps", 20}}},
                       {"conditions", {"no_prompt"}},
                       {"images", json::array({{{"id", "a"}, {"path", "a.png"}}})}};
    EXPECT_TRUE(schema("manifest").check(good).empty());
    EXPECT_NO_THROW(manifest_from_json(good));
    auto extra = good;
    extra["params"]["sampler"] = "x";
    EXPECT_FALSE(schema("manifest").check(extra).empty());
    EXPECT_THROW(manifest_from_json(extra), manifest_error);
}
