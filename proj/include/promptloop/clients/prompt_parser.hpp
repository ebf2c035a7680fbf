#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptloop/clients/types.hpp"
#include "promptloop/error.hpp"

namespace promptloop {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

inline bool starts_with_nocase(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size())
        return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

inline constexpr std::string_view negative_label = "negative prompt:";
inline constexpr std::string_view positive_label = "prompt:";

inline bool is_label_line(std::string_view line) {
    const auto t = trim(line);
    return starts_with_nocase(t, negative_label) || starts_with_nocase(t, positive_label);
}

// Text after the label; when that is empty, the following unlabeled lines up to a blank line.
inline std::string labeled_value(const std::vector<std::string_view>& lines, std::size_t index, std::size_t label_len) {
    const auto first = trim(trim(lines[index]).substr(label_len));
    if (!first.empty())
        return std::string(first);
    std::string out;
    for (std::size_t i = index + 1; i < lines.size(); ++i) {
        const auto t = trim(lines[i]);
        if (t.empty() || is_label_line(t))
            break;
        if (!out.empty())
            out += ' ';
        out += t;
    }
    return out;
}

} // namespace detail

/// Splits a free-text model reply into positive and negative prompts.
///
/// Lines are matched case-insensitively: the first `negative prompt:` line gives the
/// negative prompt and the first `prompt:` line gives the positive one. Without a labeled
/// positive line, everything before the negative label (or the whole reply) is used.
inline prompt_pair parse_prompt_reply(const std::string& raw) {
    if (detail::trim(raw).empty())
        throw parse_error("model reply is empty", raw);

    const auto lines = detail::split_lines(raw);
    std::optional<std::size_t> negative_line, positive_line;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto t = detail::trim(lines[i]);
        if (detail::starts_with_nocase(t, detail::negative_label)) {
            if (!negative_line)
                negative_line = i;
        } else if (detail::starts_with_nocase(t, detail::positive_label)) {
            if (!positive_line)
                positive_line = i;
        }
    }

    prompt_pair out;
    out.raw_response = raw;
    if (negative_line)
        out.negative = detail::labeled_value(lines, *negative_line, detail::negative_label.size());

    if (positive_line) {
        out.positive = detail::labeled_value(lines, *positive_line, detail::positive_label.size());
    } else {
        std::string head;
        const std::size_t stop = negative_line.value_or(lines.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (i)
                head += '\n';
            head += lines[i];
        }
        out.positive = std::string(detail::trim(head));
    }

    if (out.positive.empty())
        throw parse_error("no positive prompt found in model reply", raw);
    return out;
}

} // namespace promptloop
