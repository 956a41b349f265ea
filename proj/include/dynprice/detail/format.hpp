#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace dynprice {

/// Fixed 17-significant-digit rendering, identical across runs and locales.
inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace dynprice
