// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oric/error.hpp"
#include "oric/policy.hpp"
#include "oric/reward.hpp"
#include "oric/synth.hpp"

using namespace oric;

namespace {

DetectorProfile perfect_profile() {
  DetectorProfile p;
  p.miss_rate = p.class_flip_rate = p.box_jitter_sigma = p.hallucination_rate = p.duplicate_rate = 0.0;
  return p;
}

}  // namespace

TEST_CASE("generation is deterministic and well formed") {
  SynthSpec spec;
  spec.num_images = 300;
  spec.seed = 12;
  const auto a = generate(spec);
  CHECK(a == generate(spec));
  spec.seed = 13;
  CHECK_FALSE(a == generate(spec));
  validate(a);
  CHECK(a.size() == 300);
  CHECK(a.num_classes() == 20);
  CHECK(a.images.front().image_id == 1);
  CHECK(a.images.back().image_id == 300);
  CHECK(a.category_ids.front() == 1);
  for (const auto& img : a.images) {
    CHECK_FALSE(img.truths.empty());
    for (const auto& d : img.weak) {
      CHECK(d.score >= 0.0);
      CHECK(d.score <= 1.0);
      CHECK(d.box.w > 0.0);
      CHECK(d.box.right() <= img.width + 1e-9);
    }
  }
}

TEST_CASE("perfect profiles give perfect detectors and zero rewards") {
  SynthSpec spec;
  spec.num_images = 200;
  spec.weak = spec.strong = perfect_profile();
  const auto ds = generate(spec);
  const SystemEvaluator sys(ds);
  CHECK(sys.weak_map() == 1.0);
  CHECK(sys.strong_map() == 1.0);
  for (const auto& r : compute_rewards(ds, {50, 1})) {
    CHECK(r.ori == 0.0);
    CHECK(r.oric == 0.0);
  }
  for (double ratio : {0.0, 0.3, 1.0}) CHECK(sys.system_map(baseline_random(ds, ratio, 2)) == 1.0);
}

TEST_CASE("equal profiles with full correlation give identical outputs") {
  SynthSpec spec;
  spec.num_images = 200;
  spec.strong = spec.weak;
  spec.correlation = 1.0;
  const auto ds = generate(spec);
  for (const auto& img : ds.images) CHECK(img.weak == img.strong);
}

TEST_CASE("default spec: strong beats weak by a clear margin") {
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const SystemEvaluator sys(generate(spec));
    gap += (sys.strong_map() - sys.weak_map()) / 10.0;
  }
  MESSAGE("mean strong-weak gap: " << gap);
  CHECK(gap > 0.05);
}

TEST_CASE("a higher weak miss rate does not raise weak mAP") {
  double previous = 2.0;
  for (double miss : {0.1, 0.3, 0.5, 0.7}) {
    double m = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SynthSpec spec;
      spec.num_images = 400;
      spec.seed = seed;
      spec.weak.miss_rate = miss;
      m += SystemEvaluator(generate(spec)).weak_map() / 10.0;
    }
    CHECK(m <= previous);
    previous = m;
  }
}

TEST_CASE("class histogram follows the skew law") {
  SynthSpec spec;
  spec.num_images = 5000;
  spec.seed = 3;
  const auto ds = generate(spec);
  std::vector<double> counts(spec.num_classes, 0.0);
  double total = 0.0;
  for (const auto& img : ds.images) {
    for (const auto& t : img.truths) {
      counts[static_cast<std::size_t>(t.class_id)] += 1;
      total += 1;
    }
  }
  REQUIRE(total >= 1e4);
  const auto p = class_distribution(spec);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = p[k] * total;
    chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  // 99.9th percentile of chi-square with 19 degrees of freedom.
  CHECK(chi2 < 43.82);
}

TEST_CASE("spec validation and JSON") {
  SynthSpec spec;
  spec.num_classes = 1;
  CHECK_THROWS_AS(validate(spec), ValidationError);
  spec = {};
  spec.weak.miss_rate = 1.2;
  CHECK_THROWS_AS(validate(spec), ValidationError);
  spec = {};
  spec.num_images = 0;
  CHECK_THROWS_AS(validate(spec), ValidationError);

  spec = {};
  spec.seed = 77;
  spec.strong.duplicate_rate = 0.01;
  const auto back = synth_spec_from_json(synth_spec_to_json(spec));
  CHECK(synth_spec_to_json(back) == synth_spec_to_json(spec));
  CHECK(generate(back) == generate(spec));
  CHECK_THROWS_AS(synth_spec_from_json(R"({"num_image": 5})"), ValidationError);
  CHECK_THROWS_AS(synth_spec_from_json(R"({"weak": {"miss": 0.1}})"), ValidationError);
  CHECK(synth_spec_from_json(R"({"num_images": 5})").num_images == 5);
}

TEST_CASE("profile consistency warnings") {
  SynthSpec spec;
  CHECK(check_profiles(spec).empty());
  std::swap(spec.weak, spec.strong);
  CHECK(check_profiles(spec).size() == 1);
  spec.num_images = 10;
  CHECK_NOTHROW(generate(spec));
}
