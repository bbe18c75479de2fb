// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace oric {

// 1-based mid-ranks: tied values share the mean of the positions they occupy.
std::vector<double> mid_ranks(std::span<const double> values);

double mean(std::span<const double> values);

// Spearman rank correlation (Pearson on mid-ranks). 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace oric
