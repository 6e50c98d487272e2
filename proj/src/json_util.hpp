#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "eqa/error.hpp"

namespace eqa::detail {

/// Parses `text`, converting the byte offset of a syntax error into a
/// line/column pair.
inline nlohmann::json parse_json(std::string_view text, const std::string& what)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        auto limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        fail(ErrorKind::parse,
             what + ": syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": "
                 + e.what());
    }
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key, const std::string& ctx)
{
    if (!j.is_object()) {
        fail(ErrorKind::parse, ctx + ": expected an object");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        fail(ErrorKind::parse, ctx + ": missing field \"" + key + "\"");
    }
    return *it;
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const std::string& ctx)
{
    const auto& field = require_field(j, key, ctx);
    try {
        return field.get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::parse, ctx + ": field \"" + key + "\" has the wrong type");
    }
}

/// Calls `f(record, line_number)` for every non-blank line.
template <typename F>
void for_each_jsonl(std::string_view text, const std::string& what, F&& f)
{
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        ++line_no;
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::parse,
                 what + ": syntax error at line " + std::to_string(line_no) + ", column "
                     + std::to_string(e.byte) + ": " + e.what());
        }
        try {
            f(std::move(record), line_no);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parse, what + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace eqa::detail
