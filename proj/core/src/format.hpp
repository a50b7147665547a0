#pragma once

#include <cstdio>
#include <string>

namespace varmarank::detail {

// Shortest round-trip-safe text for a double; stable across runs.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace varmarank::detail
