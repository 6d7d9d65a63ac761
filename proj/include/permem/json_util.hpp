#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "permem/error.hpp"

namespace permem {

using json = nlohmann::json;

namespace detail {

inline std::string describe(std::string_view where, std::string_view key) {
    std::string out(where);
    if (!out.empty()) out += '.';
    out += key;
    return out;
}

template <typename T>
bool json_holds(const json& v) {
    if constexpr (std::is_same_v<T, bool>) return v.is_boolean();
    else if constexpr (std::is_integral_v<T>) return v.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>) return v.is_number();
    else if constexpr (std::is_same_v<T, std::string>) return v.is_string();
    else return true;
}

}  // namespace detail

// Required field of a given JSON type; schema problems surface as
// ValidationError naming the path.
template <typename T>
T require(const json& obj, std::string_view key, std::string_view where) {
    if (!obj.is_object()) throw ValidationError(std::string(where) + ": expected a JSON object");
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        throw ValidationError("missing field '" + detail::describe(where, key) + "'");
    if (!detail::json_holds<T>(*it))
        throw ValidationError("field '" + detail::describe(where, key) + "' has the wrong type");
    try {
        return it->template get<T>();
    } catch (const json::exception& e) {
        throw ValidationError("field '" + detail::describe(where, key) + "': " + e.what());
    }
}

template <typename T>
std::optional<T> optional_field(const json& obj, std::string_view key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return require<T>(obj, key, where);
}

template <typename T>
T field_or(const json& obj, std::string_view key, std::string_view where, T fallback) {
    auto v = optional_field<T>(obj, key, where);
    return v ? *v : fallback;
}

inline const json& require_array(const json& obj, std::string_view key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array())
        throw ValidationError("field '" + detail::describe(where, key) + "' must be an array");
    return *it;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json_text(const std::string& content, std::string_view origin) {
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(origin) + ": malformed JSON: " + e.what());
    }
}

inline json read_json_file(const std::string& path) { return parse_json_text(read_file(path), path); }

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file '" + path + "'");
    out << content;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace permem
