// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace oric {

// Shortest round-trip decimal form; nan, inf and -inf are spelled out.
std::string format_number(double value);

}  // namespace oric
