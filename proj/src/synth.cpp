// SPDX-License-Identifier: Apache-2.0
#include "oric/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "oric/error.hpp"
#include "oric/rng.hpp"

namespace oric {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kMinBoxFraction = 0.04;
constexpr double kMaxBoxFraction = 0.45;

struct Generator {
  const SynthSpec& spec;
  Rng rng;
  std::vector<double> cumulative;

  ClassId draw_class() {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return static_cast<ClassId>(std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1));
  }

  ClassId other_class(ClassId c) {
    const auto m = static_cast<std::uint64_t>(spec.num_classes);
    auto k = static_cast<ClassId>(rng.below(m - 1));
    return k >= c ? k + 1 : k;
  }

  BoundingBox random_box() {
    const double lo = std::log(kMinBoxFraction), hi = std::log(kMaxBoxFraction);
    double w = spec.width * std::exp(rng.uniform(lo, hi));
    double h = std::min(spec.height * 0.95, w * std::exp(0.3 * rng.normal()));
    w = std::min(w, spec.width * 0.95);
    h = std::max(h, 2.0);
    return {rng.uniform(0.0, spec.width - w), rng.uniform(0.0, spec.height - h), w, h};
  }

  // Perturbs each edge by N(0, sigma * extent), clipped to the image.
  BoundingBox jitter(const BoundingBox& b, double sigma) {
    if (sigma <= 0.0) return b;
    double x1 = b.x + sigma * b.w * rng.normal();
    double y1 = b.y + sigma * b.h * rng.normal();
    double x2 = b.right() + sigma * b.w * rng.normal();
    double y2 = b.bottom() + sigma * b.h * rng.normal();
    x1 = std::clamp(x1, 0.0, spec.width - 1.0);
    y1 = std::clamp(y1, 0.0, spec.height - 1.0);
    x2 = std::clamp(std::max(x2, x1 + 1.0), x1 + 1.0, spec.width);
    y2 = std::clamp(std::max(y2, y1 + 1.0), y1 + 1.0, spec.height);
    return {x1, y1, x2 - x1, y2 - y1};
  }

  double score(const ScoreModel& m) { return std::clamp(rng.kumaraswamy(m.a, m.b), 0.0, 1.0); }

  std::vector<Detection> outcome(const GroundTruth& gt, const DetectorProfile& p) {
    std::vector<Detection> out;
    if (rng.bernoulli(p.miss_rate)) return out;
    Detection d;
    d.class_id = rng.bernoulli(p.class_flip_rate) ? other_class(gt.class_id) : gt.class_id;
    d.box = jitter(gt.box, p.box_jitter_sigma);
    const bool erroneous = d.class_id != gt.class_id || iou(d.box, gt.box) < 0.5;
    d.score = score(erroneous ? p.erroneous : p.correct);
    out.push_back(d);
    if (rng.bernoulli(p.duplicate_rate)) {
      Detection dup = d;
      dup.box = jitter(gt.box, p.box_jitter_sigma + 0.05);
      dup.score = score(p.erroneous);
      out.push_back(dup);
    }
    return out;
  }

  Detection hallucination(const DetectorProfile& p) {
    Detection d;
    d.class_id = draw_class();
    d.box = random_box();
    d.score = score(p.erroneous);
    return d;
  }
};

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("synth spec: ") + name + " must be in [0, 1]");
}

void validate_profile(const DetectorProfile& p) {
  check_rate(p.miss_rate, "miss_rate");
  check_rate(p.class_flip_rate, "class_flip_rate");
  check_rate(p.hallucination_rate, "hallucination_rate");
  check_rate(p.duplicate_rate, "duplicate_rate");
  if (!(p.box_jitter_sigma >= 0.0) || !std::isfinite(p.box_jitter_sigma)) {
    throw ValidationError("synth spec: box_jitter_sigma must be >= 0");
  }
  for (const auto* m : {&p.correct, &p.erroneous}) {
    if (!(m->a > 0.0 && m->b > 0.0)) throw ValidationError("synth spec: score model parameters must be positive");
  }
}

ordered_json profile_to_json(const DetectorProfile& p) {
  return {{"miss_rate", p.miss_rate},
          {"class_flip_rate", p.class_flip_rate},
          {"box_jitter_sigma", p.box_jitter_sigma},
          {"hallucination_rate", p.hallucination_rate},
          {"duplicate_rate", p.duplicate_rate},
          {"correct", {p.correct.a, p.correct.b}},
          {"erroneous", {p.erroneous.a, p.erroneous.b}}};
}

void reject_unknown(const ordered_json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

DetectorProfile profile_from_json(const ordered_json& j, DetectorProfile p, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  reject_unknown(j, {"miss_rate", "class_flip_rate", "box_jitter_sigma", "hallucination_rate", "duplicate_rate",
                     "correct", "erroneous"},
                 where);
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = j[key].get<double>();
  };
  num("miss_rate", p.miss_rate);
  num("class_flip_rate", p.class_flip_rate);
  num("box_jitter_sigma", p.box_jitter_sigma);
  num("hallucination_rate", p.hallucination_rate);
  num("duplicate_rate", p.duplicate_rate);
  auto model = [&](const char* key, ScoreModel& dst) {
    if (!j.contains(key)) return;
    const auto v = j[key].get<std::vector<double>>();
    if (v.size() != 2) throw ValidationError(where + "." + key + " must be [a, b]");
    dst = {v[0], v[1]};
  };
  model("correct", p.correct);
  model("erroneous", p.erroneous);
  return p;
}

}  // namespace

DetectorProfile default_weak_profile() {
  DetectorProfile p;
  p.miss_rate = 0.3;
  p.class_flip_rate = 0.1;
  p.box_jitter_sigma = 0.12;
  p.hallucination_rate = 0.8;
  p.duplicate_rate = 0.1;
  return p;
}

DetectorProfile default_strong_profile() {
  DetectorProfile p;
  p.miss_rate = 0.1;
  p.class_flip_rate = 0.04;
  p.box_jitter_sigma = 0.05;
  p.hallucination_rate = 0.3;
  p.duplicate_rate = 0.05;
  return p;
}

void validate(const SynthSpec& spec) {
  if (spec.num_images < 1) throw ValidationError("synth spec: num_images must be >= 1");
  if (spec.num_classes < 2) throw ValidationError("synth spec: num_classes must be >= 2");
  if (!(spec.class_skew >= 0.0)) throw ValidationError("synth spec: class_skew must be >= 0");
  if (!(spec.mean_objects >= 1.0)) throw ValidationError("synth spec: mean_objects must be >= 1");
  if (!(spec.width >= 32.0 && spec.height >= 32.0)) throw ValidationError("synth spec: image extent must be >= 32 px");
  check_rate(spec.correlation, "correlation");
  validate_profile(spec.weak);
  validate_profile(spec.strong);
}

std::vector<std::string> check_profiles(const SynthSpec& spec) {
  std::vector<std::string> warnings;
  const auto& w = spec.weak;
  const auto& s = spec.strong;
  if (s.miss_rate > w.miss_rate && s.class_flip_rate > w.class_flip_rate && s.box_jitter_sigma > w.box_jitter_sigma &&
      s.hallucination_rate > w.hallucination_rate && s.duplicate_rate > w.duplicate_rate) {
    warnings.emplace_back("strong profile is worse than the weak profile on every error rate");
  }
  return warnings;
}

std::vector<double> class_distribution(const SynthSpec& spec) {
  std::vector<double> p(spec.num_classes);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = 1.0 / std::pow(static_cast<double>(k + 1), spec.class_skew);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

Dataset generate(const SynthSpec& spec) {
  validate(spec);
  Generator gen{spec, Rng(spec.seed), {}};
  double acc = 0.0;
  for (double p : class_distribution(spec)) gen.cumulative.push_back(acc += p);

  Dataset ds;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    ds.classes.push_back("class_" + std::to_string(c));
    ds.category_ids.push_back(static_cast<std::int64_t>(c) + 1);
  }
  ds.images.reserve(spec.num_images);
  for (std::size_t i = 0; i < spec.num_images; ++i) {
    ImageRecord img;
    img.image_id = static_cast<ImageId>(i) + 1;
    img.width = spec.width;
    img.height = spec.height;
    const std::size_t objects = 1 + static_cast<std::size_t>(gen.rng.poisson(spec.mean_objects - 1.0));
    for (std::size_t k = 0; k < objects; ++k) {
      GroundTruth gt{gen.random_box(), gen.draw_class()};
      img.truths.push_back(gt);
      auto weak = gen.outcome(gt, spec.weak);
      auto strong = gen.rng.bernoulli(spec.correlation) ? weak : gen.outcome(gt, spec.strong);
      img.weak.insert(img.weak.end(), weak.begin(), weak.end());
      img.strong.insert(img.strong.end(), strong.begin(), strong.end());
    }
    const auto weak_spurious = gen.rng.poisson(spec.weak.hallucination_rate);
    for (std::uint64_t k = 0; k < weak_spurious; ++k) {
      const Detection d = gen.hallucination(spec.weak);
      img.weak.push_back(d);
      if (gen.rng.bernoulli(spec.correlation)) img.strong.push_back(d);
    }
    const auto strong_spurious = gen.rng.poisson(spec.strong.hallucination_rate * (1.0 - spec.correlation));
    for (std::uint64_t k = 0; k < strong_spurious; ++k) img.strong.push_back(gen.hallucination(spec.strong));
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  ordered_json j;
  j["num_images"] = spec.num_images;
  j["num_classes"] = spec.num_classes;
  j["class_skew"] = spec.class_skew;
  j["mean_objects"] = spec.mean_objects;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["seed"] = spec.seed;
  j["correlation"] = spec.correlation;
  j["weak"] = profile_to_json(spec.weak);
  j["strong"] = profile_to_json(spec.strong);
  return j.dump();
}

SynthSpec synth_spec_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError("synth spec: malformed JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_object()) throw ValidationError("synth spec must be a JSON object");
  reject_unknown(j, {"num_images", "num_classes", "class_skew", "mean_objects", "width", "height", "seed",
                     "correlation", "weak", "strong"},
                 "synth spec");
  SynthSpec s;
  try {
    if (j.contains("num_images")) s.num_images = j["num_images"].get<std::size_t>();
    if (j.contains("num_classes")) s.num_classes = j["num_classes"].get<std::size_t>();
    if (j.contains("class_skew")) s.class_skew = j["class_skew"].get<double>();
    if (j.contains("mean_objects")) s.mean_objects = j["mean_objects"].get<double>();
    if (j.contains("width")) s.width = j["width"].get<double>();
    if (j.contains("height")) s.height = j["height"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("correlation")) s.correlation = j["correlation"].get<double>();
    if (j.contains("weak")) s.weak = profile_from_json(j["weak"], s.weak, "synth spec.weak");
    if (j.contains("strong")) s.strong = profile_from_json(j["strong"], s.strong, "synth spec.strong");
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("synth spec: ") + e.what());
  }
  validate(s);
  return s;
}

}  // namespace oric
