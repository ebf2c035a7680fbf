#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "promptloop/error.hpp"
#include "promptloop/harness/ablation.hpp"
#include "promptloop/image/codec.hpp"

namespace promptloop {

enum class report_format { csv, markdown, json };

inline report_format parse_report_format(std::string_view s) {
    if (s == "csv")
        return report_format::csv;
    if (s == "markdown" || s == "md")
        return report_format::markdown;
    if (s == "json")
        return report_format::json;
    throw precondition_error("unknown report format '" + std::string(s) + "'");
}

inline constexpr const char* csv_header = "image_id,condition,rmse,psnr,fsim,ssim,uiq,sre";

namespace detail {

inline std::string non_finite_token(double v) {
    if (std::isnan(v))
        return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline std::string format_number(double v, const char* fmt) {
    if (!std::isfinite(v))
        return non_finite_token(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

inline int table_decimals(metric_id m) {
    return (m == metric_id::psnr || m == metric_id::sre) ? 4 : 5;
}

inline std::string table_cell(metric_id m, double v) {
    const char* fmt = table_decimals(m) == 4 ? "%.4f" : "%.5f";
    return format_number(v, fmt);
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string markdown_header(std::string_view lead) {
    std::string h = "| " + std::string(lead) + " |";
    std::string rule = "|---|";
    if (lead == "Images") {
        h += " Approach |";
        rule += "---|";
    }
    for (auto m : all_metrics) {
        h += " " + std::string(metric_label(m)) + (lower_is_better(m) ? " ↓" : " ↑") + " |";
        rule += "---:|";
    }
    return h + "\n" + rule + "\n";
}

// A value is bolded when no other row in its group beats it. Ties bold every tied row.
inline bool is_best(metric_id m, double v, const std::vector<double>& group) {
    if (group.size() < 2 || std::isnan(v))
        return false;
    for (double other : group)
        if (is_better(m, other, v))
            return false;
    return true;
}

inline std::string emit_csv(const ablation_summary& s) {
    std::string out = std::string(csv_header) + "\n";
    for (const auto& r : s.records) {
        out += csv_field(r.image_id) + "," + std::string(condition_name(r.cond));
        for (auto m : all_metrics)
            out += "," + format_number(r.metrics.get(m), "%.8g");
        out += "\n";
    }
    return out;
}

inline std::string emit_markdown(const ablation_summary& s) {
    std::string out = "## Per-image comparison\n\n" + markdown_header("Images");
    bool any_flagged = false;
    for (const auto& id : s.image_ids()) {
        std::vector<const ablation_record*> rows;
        for (auto c : s.conditions)
            if (const auto* r = s.find(id, c))
                rows.push_back(r);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = *rows[i];
            std::string approach(condition_label(r.cond));
            if (r.has_infinite()) {
                approach += " †";
                any_flagged = true;
            }
            out += "| " + (i == 0 ? id : std::string()) + " | " + approach + " |";
            for (auto m : all_metrics) {
                std::vector<double> group;
                for (const auto* other : rows)
                    group.push_back(other->metrics.get(m));
                const auto cell = table_cell(m, r.metrics.get(m));
                out += " " + (is_best(m, r.metrics.get(m), group) ? "**" + cell + "**" : cell) + " |";
            }
            out += "\n";
        }
    }
    if (any_flagged)
        out += "\n† row holds a non-finite value, which is left out of the means.\n";

    out += "\n## Mean over images\n\n" + markdown_header("Condition");
    for (auto c : s.conditions) {
        const auto& cm = s.means.at(c);
        out += "| " + std::string(condition_label(c)) + " |";
        for (auto m : all_metrics) {
            const auto v = cm.get(m);
            if (!v) {
                out += " n/a |";
                continue;
            }
            std::vector<double> group;
            for (auto other : s.conditions)
                if (auto ov = s.means.at(other).get(m))
                    group.push_back(*ov);
            const auto cell = table_cell(m, *v);
            out += " " + (is_best(m, *v, group) ? "**" + cell + "**" : cell) + " |";
        }
        out += "\n";
    }

    if (s.paired_images > 0) {
        out += "\nWith-prompt wins over " + std::to_string(s.paired_images) + " paired image(s):";
        for (auto m : all_metrics)
            out += " " + std::string(metric_label(m)) + " " + std::to_string(s.win_count(m)) + "/" +
                   std::to_string(s.paired_images) + (m == metric_id::sre ? "" : ",");
        out += "\n";
    }
    if (s.partial()) {
        out += "\n**Partial run:** " + std::to_string(s.failures.size()) + " failure(s).\n\n";
        for (const auto& f : s.failures)
            out += "- " + f.image_id + " / " + std::string(condition_name(f.cond)) + ": " + f.message + "\n";
    }
    return out;
}

inline nlohmann::json number_to_json(double v) {
    if (std::isfinite(v))
        return v;
    return non_finite_token(v);
}

inline double number_from_json(const nlohmann::json& j) {
    if (j.is_number())
        return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    throw payload_error("unexpected numeric token '" + s + "'");
}

inline nlohmann::json metrics_to_json(const metric_report& r) {
    nlohmann::json j = nlohmann::json::object();
    for (auto m : all_metrics)
        j[std::string(metric_name(m))] = number_to_json(r.get(m));
    return j;
}

inline nlohmann::json emit_json_value(const ablation_summary& s) {
    nlohmann::json j;
    j["psnr_max"] = s.psnr_max;
    j["partial"] = s.partial();
    j["conditions"] = nlohmann::json::array();
    for (auto c : s.conditions)
        j["conditions"].push_back(std::string(condition_name(c)));
    j["records"] = nlohmann::json::array();
    for (const auto& r : s.records) {
        nlohmann::json rec;
        rec["image_id"] = r.image_id;
        rec["condition"] = std::string(condition_name(r.cond));
        if (r.prompts)
            rec["prompts"] = {{"positive", r.prompts->positive},
                              {"negative", r.prompts->negative},
                              {"raw_response", r.prompts->raw_response}};
        else
            rec["prompts"] = nullptr;
        rec["metrics"] = metrics_to_json(r.metrics);
        rec["generated_path"] = r.generated_path.generic_string();
        rec["has_infinite"] = r.has_infinite();
        j["records"].push_back(std::move(rec));
    }
    j["failures"] = nlohmann::json::array();
    for (const auto& f : s.failures)
        j["failures"].push_back(
            {{"image_id", f.image_id}, {"condition", std::string(condition_name(f.cond))}, {"message", f.message}});
    nlohmann::json means = nlohmann::json::object();
    for (auto c : s.conditions) {
        nlohmann::json cm = nlohmann::json::object();
        for (auto m : all_metrics) {
            const auto k = static_cast<std::size_t>(m);
            const auto& v = s.means.at(c).mean[k];
            cm[std::string(metric_name(m))] = {{"mean", v ? nlohmann::json(*v) : nlohmann::json(nullptr)},
                                               {"finite_count", s.means.at(c).finite_count[k]}};
        }
        means[std::string(condition_name(c))] = std::move(cm);
    }
    j["means"] = std::move(means);
    nlohmann::json wins = nlohmann::json::object();
    for (auto m : all_metrics)
        wins[std::string(metric_name(m))] = s.win_count(m);
    j["wins"] = std::move(wins);
    j["paired_images"] = s.paired_images;
    return j;
}

} // namespace detail

inline std::string emit_report(const ablation_summary& s, report_format fmt) {
    if (s.records.empty())
        throw precondition_error("cannot report on an empty summary");
    switch (fmt) {
    case report_format::csv: return detail::emit_csv(s);
    case report_format::markdown: return detail::emit_markdown(s);
    case report_format::json: return detail::emit_json_value(s).dump(2) + "\n";
    }
    return {};
}

/// Reads back the record dump written by emit_report(json); means and wins are recomputed.
inline ablation_summary summary_from_json(const nlohmann::json& j) {
    try {
        std::vector<condition> conditions;
        for (const auto& c : j.at("conditions"))
            conditions.push_back(parse_condition(c.get<std::string>()));
        std::vector<ablation_record> records;
        for (const auto& rj : j.at("records")) {
            ablation_record r;
            r.image_id = rj.at("image_id").get<std::string>();
            r.cond = parse_condition(rj.at("condition").get<std::string>());
            if (!rj.at("prompts").is_null()) {
                const auto& p = rj.at("prompts");
                r.prompts = prompt_pair{p.at("positive").get<std::string>(), p.at("negative").get<std::string>(),
                                        p.at("raw_response").get<std::string>()};
            }
            for (auto m : all_metrics)
                r.metrics.get(m) = detail::number_from_json(rj.at("metrics").at(std::string(metric_name(m))));
            r.generated_path = rj.at("generated_path").get<std::string>();
            records.push_back(std::move(r));
        }
        std::vector<ablation_failure> failures;
        for (const auto& fj : j.at("failures"))
            failures.push_back({fj.at("image_id").get<std::string>(),
                                parse_condition(fj.at("condition").get<std::string>()),
                                fj.at("message").get<std::string>()});
        return summarize(std::move(records), std::move(conditions), std::move(failures),
                         j.at("psnr_max").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw payload_error(std::string("malformed report json: ") + e.what());
    } catch (const manifest_error& e) {
        throw payload_error(std::string("malformed report json: ") + e.what());
    }
}

/// Writes report.csv, report.md and report.json into `out_dir`.
inline void write_reports(const ablation_summary& s, const std::filesystem::path& out_dir) {
    auto put = [&](const char* name, report_format fmt) {
        const auto text = emit_report(s, fmt);
        write_file_bytes(out_dir / name, byte_buffer(text.begin(), text.end()));
    };
    put("report.csv", report_format::csv);
    put("report.md", report_format::markdown);
    put("report.json", report_format::json);
}

struct cross_check_violation {
    std::string image_id;
    condition cond = condition::no_prompt;
    double rmse = 0.0;
    double psnr = 0.0;
    double deviation_db = 0.0;
};

/// Flags records whose psnr disagrees with 20·log10(psnr_max / rmse) by more than tolerance_db.
inline std::vector<cross_check_violation> cross_check_report(const ablation_summary& s, double tolerance_db) {
    std::vector<cross_check_violation> out;
    for (const auto& r : s.records) {
        const double rmse_v = r.metrics.rmse, psnr_v = r.metrics.psnr;
        double deviation;
        if (rmse_v == 0.0)
            deviation = (std::isinf(psnr_v) && psnr_v > 0) ? 0.0 : std::numeric_limits<double>::infinity();
        else
            deviation = std::abs(psnr_v - 20.0 * std::log10(s.psnr_max / rmse_v));
        if (!(deviation <= tolerance_db))
            out.push_back({r.image_id, r.cond, rmse_v, psnr_v, deviation});
    }
    return out;
}

} // namespace promptloop
