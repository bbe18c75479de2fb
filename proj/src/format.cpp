// SPDX-License-Identifier: Apache-2.0
#include "oric/format.hpp"

#include <charconv>
#include <cmath>

namespace oric {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace oric
