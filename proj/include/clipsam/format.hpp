#pragma once

#include <cstdio>
#include <string>

namespace clipsam {

/// Locale-independent shortest-ish rendering used in every CSV artifact.
inline std::string fmt_real(double v, int digits = 10) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Fixed-point rendering with `decimals` digits after the point.
inline std::string fmt_fixed(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace clipsam
