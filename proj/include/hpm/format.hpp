#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "hpm/errors.hpp"

namespace hpm {

/// Full-precision decimal text for a double: 17 significant digits, so
/// parsing the text recovers the exact bit pattern. Negative zero is
/// emitted as "0" to keep write/read/write cycles byte-stable.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) throw invalid_argument("format_double: non-finite value");
    if (v == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace hpm
