#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace nnspod {

/// Shortest decimal form that round-trips a double (17 significant digits).
inline std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Canonical report key for an accuracy threshold: 0.001 -> "1e-3",
/// 0.0025 -> "2.5e-3". Falls back to %.17g for values that do not fit the
/// mantissa-exponent pattern.
inline std::string threshold_key(double eps) {
    if (!(eps > 0.0)) return g17(eps);
    const int e = static_cast<int>(std::floor(std::log10(eps) + 1e-12));
    const double mant = eps / std::pow(10.0, e);
    char buf[64];
    if (std::abs(mant - std::round(mant)) < 1e-9 * std::abs(mant)) {
        std::snprintf(buf, sizeof(buf), "%de%d", static_cast<int>(std::round(mant)), e);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.12ge%d", mant, e);
    return buf;
}

}  // namespace nnspod
