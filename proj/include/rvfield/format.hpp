#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace rvf {

// Shortest round-trip decimal form; identical bytes on every run.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

}  // namespace rvf
