// SPDX-License-Identifier: Apache-2.0
#include "oric/error.hpp"

namespace oric {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUndefinedMetric: return "undefined_metric";
    case ErrorKind::kTraining: return "training";
  }
  return "unknown";
}

}  // namespace oric
