#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace permem {

// Returns the first balanced top-level JSON value opened by `open` ('{' or
// '[') that parses cleanly. Models asked for strict JSON still wrap it in
// prose or code fences now and then.
inline std::optional<nlohmann::json> extract_json(std::string_view text, char open = '{') {
    const char close = open == '{' ? '}' : ']';
    for (std::size_t start = text.find(open); start != std::string_view::npos; start = text.find(open, start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{' || c == '[') ++depth;
            else if (c == '}' || c == ']') {
                --depth;
                if (depth == 0) {
                    if (c != close) break;
                    try {
                        return nlohmann::json::parse(text.substr(start, i - start + 1));
                    } catch (const nlohmann::json::parse_error&) {
                        break;
                    }
                }
                if (depth < 0) break;
            }
        }
    }
    return std::nullopt;
}

inline std::optional<nlohmann::json> extract_json_object(std::string_view text) { return extract_json(text, '{'); }

inline std::optional<nlohmann::json> extract_json_array(std::string_view text) { return extract_json(text, '['); }

}  // namespace permem
