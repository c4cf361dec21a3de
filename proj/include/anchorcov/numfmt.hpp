#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace anchorcov {

// All serialized reals use fixed six decimal places so outputs diff stably.
inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Scale-like quantities print without decimals when integral (anchor scales
// are floored to whole pixels, strides usually are too).
inline std::string format_compact(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  return format_fixed6(v);
}

}  // namespace anchorcov
