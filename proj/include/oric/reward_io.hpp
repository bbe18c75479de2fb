// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oric/dataset.hpp"

namespace oric {

// Per-image offloading rewards. `oric` carries the (|E|+1) scaling; the raw
// strong-minus-weak context delta is kept alongside for analysis.
struct RewardRecord {
  ImageId image_id = 0;
  double ori = 0.0;
  double oric = 0.0;
  double moric = 0.0;
  std::optional<double> estimate;
  double oric_unscaled = 0.0;
  // Set when the image has no ground truth and the zero-metric convention applied.
  bool no_ground_truth = false;

  friend bool operator==(const RewardRecord&, const RewardRecord&) = default;
};

// Newline-delimited JSON, one record per line, keys in the fixed order
// image_id, ori, oric, moric, estimate, oric_unscaled, no_ground_truth.
std::string reward_to_line(const RewardRecord& record);
RewardRecord reward_from_line(const std::string& line, std::size_t line_number);

void save_rewards(const std::string& path, const std::vector<RewardRecord>& records);
std::vector<RewardRecord> load_rewards(const std::string& path);
std::vector<RewardRecord> parse_rewards(const std::string& text);

}  // namespace oric
