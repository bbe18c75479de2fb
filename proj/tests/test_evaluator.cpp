// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "oric/error.hpp"
#include "oric/evaluator.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace oric;
using test::det;
using test::gt;

namespace {

ClassStates states_of(const std::vector<ImageRecord>& images, DetectorKind which = DetectorKind::kWeak) {
  return evaluate_images(images, which);
}

// Full recomputation of mAPC: the context images, then the image, pooled.
std::optional<double> full_mapc(const std::vector<ImageRecord>& context, const ImageRecord& image,
                                DetectorKind which) {
  std::vector<ClassStates> parts;
  for (const auto& c : context) parts.push_back(match_image(c.truths, c.weak));
  parts.push_back(match_image(image.truths, image.detections(which)));
  return try_mean_ap(merge_states(parts));
}

}  // namespace

TEST_CASE("match_image examples") {
  SUBCASE("single true positive") {
    const auto s = match_image(std::vector{gt(0, 0, 0, 10, 10)}, std::vector{det(0, 0.9, 0, 0, 10, 8)});
    const auto* a = find_class(s, 0);
    REQUIRE(a);
    CHECK(a->hits == std::vector<ScoredHit>{{0.9, true}});
    CHECK(a->num_ground_truth == 1);
  }
  SUBCASE("class mismatch") {
    const auto s = match_image(std::vector{gt(0, 0, 0, 10, 10)}, std::vector{det(1, 0.9, 0, 0, 10, 10)});
    const auto* a = find_class(s, 0);
    const auto* b = find_class(s, 1);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->hits.empty());
    CHECK(a->gt_matched == std::vector<bool>{false});
    CHECK(b->num_ground_truth == 0);
    CHECK(b->hits == std::vector<ScoredHit>{{0.9, false}});
  }
  SUBCASE("duplicate: the higher score wins") {
    const auto s = match_image(std::vector{gt(0, 0, 0, 10, 10)},
                               std::vector{det(0, 0.8, 0, 0, 10, 10), det(0, 0.9, 1, 0, 10, 10)});
    CHECK(find_class(s, 0)->hits == std::vector<ScoredHit>{{0.9, true}, {0.8, false}});
  }
  SUBCASE("each detection takes the best unmatched truth") {
    const auto m = match_detections(std::vector{gt(0, 0, 0, 10, 10), gt(0, 2, 0, 10, 10)},
                                    std::vector{det(0, 0.9, 2, 0, 10, 10), det(0, 0.8, 1, 0, 10, 10)}, 0.5);
    CHECK(m.matched_truth == std::vector<int>{1, 0});
  }
  SUBCASE("threshold is inclusive") {
    // IoU exactly 0.5: [0,10] vs [0,5] in x, same y extent.
    const auto s = match_image(std::vector{gt(0, 0, 0, 10, 10)}, std::vector{det(0, 0.5, 0, 0, 5, 10)});
    CHECK(find_class(s, 0)->hits[0].true_positive);
  }
}

TEST_CASE("average_precision examples") {
  CHECK(*average_precision(std::vector<ScoredHit>{{0.9, true}}, 1) == 1.0);
  CHECK(*average_precision(std::vector<ScoredHit>{{0.9, false}, {0.3, true}}, 1) == 0.5);
  CHECK(*average_precision(std::vector<ScoredHit>{}, 1) == 0.0);
  CHECK_FALSE(average_precision(std::vector<ScoredHit>{{0.9, false}}, 0).has_value());
  // TP, FP, TP over 2 GT: precision 1 at recall .5, 2/3 at recall 1.
  CHECK(*average_precision(std::vector<ScoredHit>{{0.9, true}, {0.8, false}, {0.7, true}}, 2) ==
        doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
  // 11-point: precision 1 for recall <= .5, 2/3 above.
  CHECK(*average_precision(std::vector<ScoredHit>{{0.9, true}, {0.8, false}, {0.7, true}}, 2,
                           Interpolation::kElevenPoint) == doctest::Approx((6.0 + 5.0 * 2.0 / 3.0) / 11.0));
}

TEST_CASE("mean_ap examples") {
  SUBCASE("two classes, AP 1 and 0") {
    const std::vector images{test::image(1, {gt(0, 0, 0, 10, 10), gt(1, 20, 20, 10, 10)}, {det(0, 0.9, 0, 0, 10, 10)})};
    CHECK(mean_ap(states_of(images)) == 0.5);
  }
  SUBCASE("zero-GT class with false positives is excluded") {
    const std::vector images{test::image(1, {gt(0, 0, 0, 10, 10)},
                                         {det(0, 0.9, 50, 50, 5, 5), det(0, 0.3, 0, 0, 10, 10),
                                          det(1, 0.9, 0, 0, 3, 3), det(1, 0.8, 5, 5, 3, 3), det(1, 0.7, 9, 9, 3, 3)})};
    CHECK(mean_ap(states_of(images)) == 0.5);
  }
  SUBCASE("no detections") {
    const std::vector images{test::image(1, {gt(0, 0, 0, 10, 10), gt(1, 20, 20, 10, 10)}, {})};
    CHECK(mean_ap(states_of(images)) == 0.0);
  }
  SUBCASE("no ground truth anywhere") {
    const std::vector images{test::image(1, {}, {det(0, 0.9, 0, 0, 10, 10)})};
    CHECK_THROWS_AS(mean_ap(states_of(images)), UndefinedMetric);
    CHECK_FALSE(try_mean_ap(states_of(images)).has_value());
  }
}

TEST_CASE("map_per_image examples") {
  const auto cat = gt(0, 0, 0, 10, 10);
  CHECK(*map_per_image(test::image(1, {cat}, {det(0, 0.9, 0, 0, 10, 10)}), DetectorKind::kWeak) == 1.0);
  // The hallucinated dog has no ground truth in the image and is invisible.
  CHECK(*map_per_image(test::image(1, {cat}, {det(0, 0.9, 0, 0, 10, 10), det(1, 0.95, 40, 40, 10, 10)}),
                       DetectorKind::kWeak) == 1.0);
  CHECK(*map_per_image(test::image(1, {cat, gt(1, 20, 20, 5, 5)}, {}), DetectorKind::kWeak) == 0.0);
  CHECK_FALSE(map_per_image(test::image(1, {}, {det(0, 0.9, 0, 0, 10, 10)}), DetectorKind::kWeak).has_value());
}

TEST_CASE("evaluator matches the brute-force reference on random data") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.below(4);
    const auto images = test::random_images(rng, 1 + rng.below(5), m, 6);
    for (auto which : {DetectorKind::kWeak, DetectorKind::kStrong}) {
      const auto ours = try_mean_ap(states_of(images, which));
      const auto ref = test::reference_map(images, which, m);
      REQUIRE(ours.has_value() == ref.has_value());
      if (ours) CHECK(*ours == doctest::Approx(*ref).epsilon(1e-12));

      test::ReferenceOptions eleven;
      eleven.eleven_point = true;
      const auto ours11 = try_mean_ap(states_of(images, which), Interpolation::kElevenPoint);
      const auto ref11 = test::reference_map(images, which, m, eleven);
      if (ours11) CHECK(*ours11 == doctest::Approx(*ref11).epsilon(1e-12));
    }
    for (const auto& img : images) {
      const auto ours = map_per_image(img, DetectorKind::kWeak);
      const auto ref = test::reference_mapi(img, DetectorKind::kWeak, m);
      REQUIRE(ours.has_value() == ref.has_value());
      if (ours) CHECK(*ours == doctest::Approx(*ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("AP properties") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredHit> hits;
    const std::size_t n = rng.below(12);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool t = rng.bernoulli(0.5);
      tp += t;
      hits.push_back({1.0 - static_cast<double>(k) / 20.0, t});
    }
    const std::size_t g = tp + rng.below(3) + (tp == 0 ? 1 : 0);
    const double ap = *average_precision(hits, g);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);

    auto rescaled = hits;
    for (auto& h : rescaled) h.score = std::exp(3.0 * h.score) - 4.0;
    CHECK(*average_precision(rescaled, g) == ap);

    auto low_fp = hits;
    low_fp.push_back({-1.0, false});
    CHECK(*average_precision(low_fp, g) <= ap);

    if (tp < g) {
      auto top_tp = hits;
      top_tp.insert(top_tp.begin(), {2.0, true});
      CHECK(*average_precision(top_tp, g) >= ap);
    }
  }
}

TEST_CASE("mean_ap over disjoint class sets re-averages per-class APs") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    // Classes 0-1 in the first set, 2-3 in the second.
    auto a = test::random_images(rng, 3, 2, 5, 1);
    auto b = test::random_images(rng, 3, 2, 5, 10);
    for (auto& img : b) {
      for (auto& t : img.truths) t.class_id += 2;
      for (auto& d : img.weak) d.class_id += 2;
    }
    std::vector<ImageRecord> both = a;
    both.insert(both.end(), b.begin(), b.end());
    std::vector<double> aps;
    for (const auto& part : {a, b}) {
      for (const auto& c : per_class_ap(states_of(part))) {
        if (c.ap) aps.push_back(*c.ap);
      }
    }
    const auto joint = try_mean_ap(states_of(both));
    REQUIRE(joint.has_value() == !aps.empty());
    if (joint) {
      double sum = 0;
      for (double v : aps) sum += v;
      CHECK(*joint == doctest::Approx(sum / static_cast<double>(aps.size())).epsilon(1e-12));
    }
  }
}

TEST_CASE("build_context examples") {
  CHECK(build_context({}).size() == 0);
  CHECK(build_context({}).classes().empty());
  Rng rng(3);
  const auto images = test::random_images(rng, 6, 3, 5);
  const ContextState single(std::span<const ImageRecord>(images).first(1));
  CHECK(single.classes() == match_image(images[0].truths, images[0].weak));
  const ContextState ctx(images);
  CHECK(ctx.size() == 6);
  CHECK(ctx.classes() == evaluate_images(images, DetectorKind::kWeak));
}

TEST_CASE("incremental mAPC equals full recomputation") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.below(5);
    const auto context = test::random_images(rng, rng.below(20), m, 6);
    auto image = test::random_image(rng, 1000, m, 6);
    if (!context.empty() && rng.bernoulli(0.2)) image = context[rng.below(context.size())];
    if (rng.bernoulli(0.1)) image.weak.clear();
    const ContextState state(context);
    for (auto which : {DetectorKind::kWeak, DetectorKind::kStrong}) {
      const auto fast = state.mapc(image, which);
      const auto slow = full_mapc(context, image, which);
      REQUIRE(fast.has_value() == slow.has_value());
      if (fast) CHECK(*fast == *slow);
    }
  }
}

TEST_CASE("mapc with an empty context is the per-image mAP") {
  Rng rng(12);
  const ContextState empty;
  for (int trial = 0; trial < 100; ++trial) {
    const auto image = test::random_image(rng, 1, 3, 6);
    CHECK(empty.mapc(image, DetectorKind::kWeak) == map_per_image(image, DetectorKind::kWeak));
  }
}

TEST_CASE("image without detections grows recall denominators") {
  const std::vector context{test::image(1, {gt(0, 0, 0, 10, 10)}, {det(0, 0.9, 0, 0, 10, 10)})};
  const auto image = test::image(2, {gt(0, 0, 0, 10, 10)}, {});
  const ContextState state(context);
  CHECK(*state.mapc(image, DetectorKind::kWeak) == 0.5);
  CHECK(state.num_eval_classes(match_image(image.truths, image.weak)) == 1);
}

TEST_CASE("mixed contexts use the strong detector for the leading share") {
  const std::vector context{test::image(1, {gt(0, 0, 0, 10, 10)}, {}, {det(0, 0.9, 0, 0, 10, 10)}),
                            test::image(2, {gt(0, 0, 0, 10, 10)}, {}, {det(0, 0.9, 0, 0, 10, 10)})};
  const ContextState half(context, {}, {0.5});
  CHECK(half.classes()[0].num_true_positives() == 1);
  const ContextState weak_only(context);
  CHECK(weak_only.classes()[0].num_true_positives() == 0);
}
