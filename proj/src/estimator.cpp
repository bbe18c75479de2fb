// SPDX-License-Identifier: Apache-2.0
#include "oric/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "oric/error.hpp"
#include "oric/rng.hpp"
#include "oric/stats.hpp"

namespace oric {
namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const char* to_string(TargetKind kind) noexcept {
  switch (kind) {
    case TargetKind::kMoric: return "moric";
    case TargetKind::kOric: return "oric";
    case TargetKind::kMori: return "mori";
    case TargetKind::kOri: return "ori";
  }
  return "moric";
}

TargetKind target_kind_from_string(const std::string& name) {
  if (name == "moric") return TargetKind::kMoric;
  if (name == "oric" || name == "raw-oric") return TargetKind::kOric;
  if (name == "mori") return TargetKind::kMori;
  if (name == "ori" || name == "raw-ori") return TargetKind::kOri;
  throw ValidationError("unknown target '" + name + "' (expected moric, oric, mori or ori)");
}

void validate(const TrainConfig& c) {
  if (c.hidden.empty()) throw ValidationError("train config: at least one hidden layer is required");
  for (auto h : c.hidden) {
    if (h == 0) throw ValidationError("train config: hidden sizes must be positive");
  }
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw ValidationError("train config: learning_rate must be positive");
  }
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ValidationError("train config: momentum must be in [0, 1)");
  if (c.batch_size == 0) throw ValidationError("train config: batch_size must be positive");
  if (c.weighted && !is_rank_target(c.target)) {
    throw ValidationError("train config: loss weighting needs a rank target (moric or mori)");
  }
}

std::string train_config_to_json(const TrainConfig& c) {
  ordered_json j;
  j["hidden"] = c.hidden;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["weighted"] = c.weighted;
  j["target"] = to_string(c.target);
  j["shuffle"] = c.shuffle;
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError("train config: malformed JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_object()) throw ValidationError("train config must be a JSON object");
  static const std::set<std::string> known{"hidden", "learning_rate", "momentum", "epochs", "batch_size",
                                           "seed", "weighted", "target", "shuffle"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("train config: unknown key '" + key + "'");
  }
  TrainConfig c;
  try {
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<std::size_t>>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("momentum")) c.momentum = j["momentum"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("target")) {
      c.target = target_kind_from_string(j["target"].get<std::string>());
      // Raw targets default to the unweighted loss.
      if (!j.contains("weighted")) c.weighted = is_rank_target(c.target);
    }
    if (j.contains("weighted")) c.weighted = j["weighted"].get<bool>();
    if (j.contains("shuffle")) c.shuffle = j["shuffle"].get<bool>();
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_hash(const TrainConfig& config) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a(train_config_to_json(config));
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

MlpModel train(std::span<const FeatureVector> features, std::span<const double> targets,
               const TrainConfig& config) {
  validate(config);
  if (features.size() != targets.size()) throw InvalidArgument("features and targets differ in length");
  if (features.size() < config.batch_size) {
    throw InvalidArgument("need at least batch_size (" + std::to_string(config.batch_size) +
                          ") samples, got " + std::to_string(features.size()));
  }
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw InvalidArgument("feature vectors differ in dimension");
  }
  if (config.weighted) {
    for (double t : targets) {
      if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("weighted loss needs targets in [0, 1]");
    }
  }

  MlpModel model = init_mlp(dim, config.hidden, config.seed);
  model.clamp_output = is_rank_target(config.target);
  model.config_hash = config_hash(config);

  const std::size_t n = features.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, 1));

  std::vector<double> params = flatten_parameters(model);
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad(params.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        loss += accumulate_gradient(model, features[i], targets[i], config.weighted ? targets[i] : 1.0, grad);
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", samples [" +
                            std::to_string(start) + ", " + std::to_string(end) +
                            "); lower the learning rate (now " + std::to_string(config.learning_rate) + ")");
      }
      const double scale = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = config.momentum * velocity[p] - scale * grad[p];
        params[p] += velocity[p];
      }
      assign_parameters(model, params);
    }
  }
  return model;
}

std::vector<double> training_targets(std::span<const RewardRecord> rewards, TargetKind kind) {
  std::vector<double> raw(rewards.size());
  const bool per_image = kind == TargetKind::kMori || kind == TargetKind::kOri;
  for (std::size_t i = 0; i < rewards.size(); ++i) raw[i] = per_image ? rewards[i].ori : rewards[i].oric;
  if (!is_rank_target(kind)) return raw;
  return moric(raw);
}

std::vector<std::size_t> assign_folds(const Dataset& dataset, std::size_t folds, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (folds < 2) throw InvalidArgument("need at least 2 folds");
  if (n < folds) throw InvalidArgument("fewer images than folds");
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return dataset.images[a].image_id < dataset.images[b].image_id;
  });
  Rng rng(derive_seed(seed, 2));
  rng.shuffle(by_id);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[by_id[k]] = k % folds;
  return fold_of;
}

CrossValidation cross_validate(const Dataset& dataset, const ContextSpec& context,
                               const TrainConfig& config, std::size_t folds, const RewardOptions& options) {
  validate(config);
  CrossValidation cv;
  cv.fold_of = assign_folds(dataset, folds, config.seed);
  cv.estimates.assign(dataset.size(), 0.0);
  const auto features = extract_dataset_features(dataset);

  for (std::size_t f = 0; f < folds; ++f) {
    FoldResult fold;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (cv.fold_of[i] == f ? fold.test_indices : fold.train_indices).push_back(i);
    }
    std::vector<ImageRecord> train_images;
    train_images.reserve(fold.train_indices.size());
    for (std::size_t i : fold.train_indices) train_images.push_back(dataset.images[i]);

    ContextSpec fold_context{std::min(context.size, train_images.size()), derive_seed(context.seed, f)};
    const auto context_images = sample_context(train_images, fold_context);
    const ContextState state(context_images, options.eval, options.context_detectors);
    fold.train_rewards = compute_rewards(train_images, state, options.threads);

    const auto targets = training_targets(fold.train_rewards, config.target);
    std::vector<FeatureVector> train_features;
    train_features.reserve(fold.train_indices.size());
    for (std::size_t i : fold.train_indices) train_features.push_back(features[i]);

    TrainConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, 100 + f);
    fold.model = train(train_features, targets, fold_config);
    for (std::size_t i : fold.test_indices) cv.estimates[i] = predict(fold.model, features[i]);
    cv.folds.push_back(std::move(fold));
  }
  return cv;
}

}  // namespace oric
