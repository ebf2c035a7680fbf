#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "promptloop/clients/types.hpp"
#include "promptloop/error.hpp"

namespace promptloop {

enum class condition { no_prompt, with_prompt };

inline constexpr std::string_view condition_name(condition c) {
    return c == condition::no_prompt ? "no_prompt" : "with_prompt";
}

inline constexpr std::string_view condition_label(condition c) {
    return c == condition::no_prompt ? "w/o prompt" : "with prompt";
}

inline condition parse_condition(std::string_view name) {
    if (name == "no_prompt")
        return condition::no_prompt;
    if (name == "with_prompt")
        return condition::with_prompt;
    throw manifest_error("unknown condition '" + std::string(name) + "' (expected no_prompt or with_prompt)");
}

/// Parses a comma-separated list; result is deduplicated, no_prompt first.
inline std::vector<condition> parse_conditions(std::string_view list) {
    bool none = false, with = false;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto end = list.find(',', start);
        if (end == std::string_view::npos)
            end = list.size();
        auto item = list.substr(start, end - start);
        while (!item.empty() && item.front() == ' ')
            item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ')
            item.remove_suffix(1);
        if (!item.empty())
            (parse_condition(item) == condition::no_prompt ? none : with) = true;
        start = end + 1;
    }
    std::vector<condition> out;
    if (none)
        out.push_back(condition::no_prompt);
    if (with)
        out.push_back(condition::with_prompt);
    if (out.empty())
        throw manifest_error("at least one condition is required");
    return out;
}

struct manifest_entry {
    std::string id;
    std::filesystem::path path;
};

struct manifest {
    std::vector<manifest_entry> entries;
    generation_params params;
    std::string instruction = default_instruction;
    std::vector<condition> conditions = {condition::no_prompt, condition::with_prompt};
    std::uint64_t master_seed = 0;

    void validate() const {
        if (entries.empty())
            throw manifest_error("manifest lists no images");
        if (conditions.empty())
            throw manifest_error("manifest selects no conditions");
        if (instruction.empty())
            throw manifest_error("instruction must not be empty");
        std::set<std::string> seen;
        for (const auto& e : entries) {
            if (e.id.empty())
                throw manifest_error("image id must not be empty");
            if (e.id == "." || e.id == ".." || e.id.find_first_of("/\\") != std::string::npos)
                throw manifest_error("image id '" + e.id + "' is not usable as a directory name");
            if (!seen.insert(e.id).second)
                throw manifest_error("duplicate image id '" + e.id + "'");
        }
        try {
            params.validate();
        } catch (const precondition_error& e) {
            throw manifest_error(std::string("params: ") + e.what());
        }
    }

    /// Per-image seeds drawn in manifest order from a mt19937_64 seeded with master_seed,
    /// masked to 63 bits. Both conditions of an image share its seed.
    std::vector<std::uint64_t> image_seeds() const {
        std::mt19937_64 engine(master_seed);
        std::vector<std::uint64_t> seeds(entries.size());
        for (auto& s : seeds)
            s = engine() >> 1;
        return seeds;
    }
};

/// Relative image paths resolve against `base_dir`.
inline manifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object())
        throw manifest_error("manifest must be a JSON object");
    manifest m;
    try {
        if (j.contains("master_seed")) {
            const auto& s = j.at("master_seed");
            if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
                throw manifest_error("master_seed must be a non-negative integer");
            m.master_seed = s.get<std::uint64_t>();
        }
        if (j.contains("instruction"))
            m.instruction = j.at("instruction").get<std::string>();
        if (j.contains("params")) {
            const auto& p = j.at("params");
            if (!p.is_object())
                throw manifest_error("params must be an object");
            for (const auto& [key, value] : p.items()) {
                if (key == "strength")
                    m.params.strength = value.get<double>();
                else if (key == "steps")
                    m.params.steps = value.get<int>();
                else if (key == "guidance")
                    m.params.guidance = value.get<double>();
                else if (key == "seed")
                    m.params.seed = value.is_null() ? std::nullopt : std::optional<std::uint64_t>(value.get<std::uint64_t>());
                else
                    throw manifest_error("unknown params field '" + key + "'");
            }
        }
        if (j.contains("conditions")) {
            std::string joined;
            for (const auto& c : j.at("conditions"))
                joined += c.get<std::string>() + ",";
            m.conditions = parse_conditions(joined);
        }
        if (!j.contains("images") || !j.at("images").is_array())
            throw manifest_error("manifest needs an 'images' array");
        for (const auto& item : j.at("images")) {
            manifest_entry e;
            e.id = item.at("id").get<std::string>();
            e.path = item.at("path").get<std::string>();
            if (e.path.is_relative() && !base_dir.empty())
                e.path = base_dir / e.path;
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw manifest_error(std::string("malformed manifest: ") + e.what());
    }
    m.validate();
    return m;
}

inline manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw manifest_error("cannot open manifest " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw manifest_error("manifest " + path.string() + " is not valid JSON");
    return manifest_from_json(j, path.parent_path());
}

} // namespace promptloop
