#pragma once
#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <sdwd/error.hpp>

namespace sdwd {

/// Locale-independent decimal with 17 significant digits (round-trips any double).
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Strict, locale-independent parse; a leading '+' is accepted.
inline bool try_parse_double(std::string_view s, double& out)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline double parse_double(std::string_view s, std::string_view context)
{
    double v;
    if (!try_parse_double(s, v)) {
        throw DataError(std::string(context) + ": not a number: '" + std::string(s) + "'");
    }
    return v;
}

template <class Int>
bool try_parse_int(std::string_view s, Int& out)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace sdwd
