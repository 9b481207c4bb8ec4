#pragma once

#include <charconv>
#include <string>

namespace mdlcl {

/// Shortest decimal that parses back to the same double.
inline std::string shortest_decimal(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace mdlcl
