#pragma once

#include <cstdio>
#include <string>

namespace specshift {

/// Shortest round-trip decimal for a double; "inf"/"nan" spelled so that
/// std::stod parses them back. Reruns of a deterministic pipeline therefore
/// produce byte-identical CSVs.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace specshift
