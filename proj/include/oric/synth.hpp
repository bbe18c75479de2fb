// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oric/dataset.hpp"

namespace oric {

// Kumaraswamy(a, b) confidence distribution on [0, 1].
struct ScoreModel {
  double a = 2.0;
  double b = 2.0;
};

struct DetectorProfile {
  double miss_rate = 0.0;
  double class_flip_rate = 0.0;
  double box_jitter_sigma = 0.0;    // std-dev of edge noise, as a fraction of box size
  double hallucination_rate = 0.0;  // expected spurious boxes per image
  double duplicate_rate = 0.0;
  ScoreModel correct{6.0, 1.5};
  ScoreModel erroneous{1.5, 4.0};
};

DetectorProfile default_weak_profile();
DetectorProfile default_strong_profile();

struct SynthSpec {
  std::size_t num_images = 2000;
  std::size_t num_classes = 20;
  double class_skew = 1.5;  // class k drawn with weight 1 / (k + 1)^skew
  double mean_objects = 3.0;  // objects per image: 1 + Poisson(mean - 1)
  double width = 640.0;
  double height = 480.0;
  std::uint64_t seed = 0;
  DetectorProfile weak = default_weak_profile();
  DetectorProfile strong = default_strong_profile();
  // Probability that the strong detector repeats the weak detector's outcome
  // on an object (including its errors); weak hallucinations carry over with
  // the same probability.
  double correlation = 0.5;
};

// Throws ValidationError on out-of-range fields.
void validate(const SynthSpec& spec);

// Returns warnings, e.g. a strong profile that is worse than the weak one everywhere.
std::vector<std::string> check_profiles(const SynthSpec& spec);

// Deterministic for a fixed spec. Image ids run 1..N, category ids 1..M.
Dataset generate(const SynthSpec& spec);

// Class probabilities implied by the skew law.
std::vector<double> class_distribution(const SynthSpec& spec);

std::string synth_spec_to_json(const SynthSpec& spec);
// Absent keys keep their defaults; unknown keys are rejected.
SynthSpec synth_spec_from_json(const std::string& text);

}  // namespace oric
