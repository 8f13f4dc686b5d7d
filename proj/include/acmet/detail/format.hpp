#pragma once

#include <cstdio>
#include <string>

namespace acmet::detail {

// Report formatting: 6 significant digits, C locale, stable across runs.
inline std::string num6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Lossless-enough round trip for short decimal fixtures (15 significant digits).
inline std::string num_roundtrip(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

}  // namespace acmet::detail
