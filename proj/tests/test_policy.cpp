// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oric/error.hpp"
#include "oric/policy.hpp"
#include "oric/synth.hpp"
#include "support.hpp"

using namespace oric;
using test::det;
using test::gt;

namespace {

std::vector<ScoredImage> scores(std::initializer_list<std::pair<ImageId, double>> list) {
  std::vector<ScoredImage> out;
  for (auto [id, s] : list) out.push_back({id, s});
  return out;
}

Dataset small_synth(std::uint64_t seed, std::size_t n) {
  SynthSpec spec;
  spec.num_images = n;
  spec.num_classes = 4;
  spec.seed = seed;
  return generate(spec);
}

}  // namespace

TEST_CASE("budget rounding is half-up") {
  CHECK(budget_for_ratio(0.25, 10) == 3);
  CHECK(budget_for_ratio(0.24, 10) == 2);
  CHECK(budget_for_ratio(0.0, 10) == 0);
  CHECK(budget_for_ratio(1.0, 10) == 10);
  CHECK_THROWS_AS(budget_for_ratio(1.5, 10), InvalidArgument);
}

TEST_CASE("threshold_plan examples") {
  const auto s = scores({{1, 0.1}, {2, 0.5}, {3, 0.9}, {4, 0.3}, {5, 0.7}});
  const auto p = threshold_plan(s, 0.4);
  CHECK(p.offloaded == std::vector<ImageId>{3, 5});
  CHECK(p.threshold == 0.7);
  CHECK(threshold_plan(s, 0.0).offloaded.empty());
  CHECK(std::isinf(threshold_plan(s, 0.0).threshold));
  CHECK(threshold_plan(s, 1.0).offloaded.size() == 5);

  const auto tied = scores({{9, 0.5}, {4, 0.5}, {7, 0.5}, {2, 0.5}});
  CHECK(threshold_plan(tied, 0.5).offloaded == std::vector<ImageId>{2, 4});

  const auto mixed = scores({{1, 0.9}, {5, 0.4}, {3, 0.4}, {2, 0.4}, {4, 0.1}});
  CHECK(threshold_plan(mixed, 0.6).offloaded == std::vector<ImageId>{1, 2, 3});
}

TEST_CASE("system_map brackets and matches direct evaluation") {
  const auto ds = small_synth(1, 40);
  const SystemEvaluator sys(ds);
  CHECK(sys.weak_map() == mean_ap(evaluate_images(ds.images, DetectorKind::kWeak)));
  CHECK(sys.strong_map() == mean_ap(evaluate_images(ds.images, DetectorKind::kStrong)));
  CHECK(sys.system_map(OffloadPlan{}) == sys.weak_map());
  OffloadPlan all;
  for (const auto& img : ds.images) all.offloaded.push_back(img.image_id);
  CHECK(sys.system_map(all) == sys.strong_map());
  CHECK(system_map(ds, all) == sys.strong_map());
  CHECK(sys.normalized(sys.weak_map()) == 0.0);
  CHECK(sys.normalized(sys.strong_map()) == 1.0);

  // Any plan against direct pooled evaluation of the composed assignment.
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<bool> mask(ds.size());
    std::vector<ImageRecord> composed = ds.images;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      mask[i] = rng.bernoulli(0.5);
      if (mask[i]) composed[i].weak = composed[i].strong;
    }
    CHECK(sys.system_map(mask) == mean_ap(evaluate_images(composed, DetectorKind::kWeak)));
  }
  OffloadPlan bad;
  bad.offloaded = {12345};
  CHECK_THROWS_AS(sys.system_map(bad), ValidationError);
}

TEST_CASE("oracle_best_subset") {
  SUBCASE("crafted: offloading image 2 alone beats every pair") {
    const auto ds = test::dataset(
        {test::image(1, {gt(0, 0, 0, 10, 10)}, {det(0, 0.9, 0, 0, 10, 10)}, {}),
         test::image(2, {gt(0, 0, 0, 10, 10)}, {}, {det(0, 0.9, 0, 0, 10, 10)}),
         test::image(3, {gt(0, 0, 0, 10, 10)}, {det(0, 0.8, 0, 0, 10, 10)},
                     {det(0, 0.8, 0, 0, 10, 10), det(0, 0.95, 50, 50, 10, 10)})},
        1);
    CHECK(oracle_best_subset(ds, 2).offloaded == std::vector<ImageId>{2});
    CHECK(oracle_best_subset(ds, 0).offloaded.empty());
    CHECK(oracle_best_subset(ds, 3).offloaded == std::vector<ImageId>{2});
  }
  SUBCASE("dominates every enumerated plan") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto ds = small_synth(seed, 10);
      const SystemEvaluator sys(ds);
      const std::size_t budget = 1 + seed % 4;
      const double best = sys.system_map(oracle_best_subset(ds, budget));
      for (unsigned bits = 0; bits < (1u << ds.size()); ++bits) {
        if (static_cast<std::size_t>(__builtin_popcount(bits)) > budget) continue;
        std::vector<bool> mask(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) mask[i] = bits >> i & 1u;
        CHECK(sys.system_map(mask) <= best);
      }
    }
  }
  SUBCASE("guard") { CHECK_THROWS_AS(oracle_best_subset(small_synth(0, 21), 2), InvalidArgument); }
}

TEST_CASE("baseline_random") {
  const auto ds = small_synth(2, 30);
  CHECK(baseline_random(ds, 0.0, 1).offloaded.empty());
  CHECK(baseline_random(ds, 1.0, 1).offloaded.size() == 30);
  const auto a = baseline_random(ds, 0.3, 5);
  CHECK(a.offloaded.size() == 9);
  CHECK(a.offloaded == baseline_random(ds, 0.3, 5).offloaded);
  CHECK(std::is_sorted(a.offloaded.begin(), a.offloaded.end()));
}

TEST_CASE("dcsb rule") {
  const auto empty_weak = test::image(1, {gt(0, 0, 0, 10, 10)}, {}, {det(0, 0.9, 0, 0, 10, 10)});
  CHECK(dcsb_object_count(empty_weak.weak, 0.5) == 0);
  CHECK(std::isinf(dcsb_min_area(empty_weak, 0.5)));
  CHECK_FALSE(dcsb_offloads(empty_weak, {}));
  // Zero detections reach a count threshold of zero but not of one; the area
  // rule never fires without detections.
  CHECK(dcsb_offloads(empty_weak, {0, 0.0, 0.5}));
  CHECK_FALSE(dcsb_offloads(empty_weak, {1, 1.0, 0.5}));
  CHECK(dcsb_label(empty_weak, 0.5));

  const auto small_box = test::image(2, {}, {det(0, 0.9, 0, 0, 10, 10), det(0, 0.2, 0, 0, 1, 1)});
  CHECK(dcsb_object_count(small_box.weak, 0.5) == 1);
  CHECK(dcsb_min_area(small_box, 0.5) == 0.01);
  CHECK(dcsb_offloads(small_box, {5, 0.02, 0.5}));
  CHECK_FALSE(dcsb_offloads(small_box, {5, 0.01, 0.5}));

  const auto ds = small_synth(3, 20);
  CHECK(baseline_dcsb(ds, {}).offloaded.empty());
}

TEST_CASE("fit_dcsb matches an exhaustive grid") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ds = small_synth(seed, 60);
    const auto fit = fit_dcsb(ds.images);
    std::size_t max_count = 0;
    std::vector<double> areas{0.0, 1.0};
    for (const auto& img : ds.images) {
      max_count = std::max(max_count, dcsb_object_count(img.weak, 0.5));
      const double a = dcsb_min_area(img, 0.5);
      if (std::isfinite(a)) areas.push_back(std::nextafter(a, 2.0));
    }
    std::vector<double> counts{std::numeric_limits<double>::infinity()};
    for (std::size_t c = 0; c <= max_count + 1; ++c) counts.push_back(static_cast<double>(c));
    double best = 0.0;
    for (double c : counts) {
      for (double a : areas) best = std::max(best, dcsb_accuracy(ds.images, {c, a, 0.5}));
    }
    CHECK(fit.accuracy == best);
    CHECK(dcsb_accuracy(ds.images, fit.thresholds) == fit.accuracy);
  }
}

TEST_CASE("results CSV") {
  const std::vector<PolicyResult> rows{{"random", 0.2, 3, 0.5, 0.25},
                                       {"oracle-oric", 1, 0, 0.75, std::nan("")}};
  CHECK(results_to_csv(rows) ==
        "policy,ratio,seed,map,normalized_map\nrandom,0.2,3,0.5,0.25\noracle-oric,1,0,0.75,nan\n");
}
