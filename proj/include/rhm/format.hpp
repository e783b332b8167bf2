#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

namespace rhm {

// Locale-independent number formatting for result files: 17 significant
// digits, '.' separator, LF line endings everywhere.
inline std::string format_real(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

inline std::string format_uint(std::uint64_t x) { return std::to_string(x); }
inline std::string format_int(std::int64_t x) { return std::to_string(x); }

}  // namespace rhm
