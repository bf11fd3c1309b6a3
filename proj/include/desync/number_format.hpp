#pragma once

#include <charconv>
#include <string>

namespace desync {

// Shortest text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

// Fixed-point, for milliseconds in summary tables.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace desync
