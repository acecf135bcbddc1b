#pragma once

#include "grushin/types.hpp"

#include <charconv>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace grushin::detail {

inline double to_number(std::string_view text, std::string_view what)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t' || text.front() == '+'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t'))
        text.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("malformed number for '" + std::string(what) + "': '" + std::string(text) + "'");
    return value;
}

/// Numbers separated by any mix of spaces, tabs, commas, and semicolons.
inline std::vector<double> parse_numbers(std::string_view text)
{
    std::vector<double> out;
    std::size_t i = 0;
    auto sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == ';'; };
    while (i < text.size()) {
        while (i < text.size() && sep(text[i]))
            ++i;
        std::size_t j = i;
        while (j < text.size() && !sep(text[j]))
            ++j;
        if (j > i)
            out.push_back(to_number(text.substr(i, j - i), "list"));
        i = j;
    }
    return out;
}

inline double get_number(const std::map<std::string, std::string>& kv, const std::string& key)
{
    const auto it = kv.find(key);
    if (it == kv.end())
        throw ConfigError("missing key '" + key + "'");
    return to_number(it->second, key);
}

} // namespace grushin::detail
