// SPDX-License-Identifier: Apache-2.0
#include "oric/oric.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "oric/config.hpp"
#include "oric/dataset.hpp"
#include "oric/error.hpp"
#include "oric/estimator.hpp"
#include "oric/evaluator.hpp"
#include "oric/experiment.hpp"
#include "oric/features.hpp"
#include "oric/mlp.hpp"
#include "oric/reward.hpp"
#include "oric/reward_io.hpp"
#include "oric/stats.hpp"
#include "oric/synth.hpp"

struct oric_dataset {
  oric::Dataset value;
};

struct oric_reward_set {
  std::vector<oric::RewardRecord> value;
};

struct oric_model {
  oric::MlpModel value;
};

namespace {

using ordered_json = nlohmann::ordered_json;

thread_local std::string last_error;

oric_status status_of(oric::ErrorKind kind) {
  switch (kind) {
    case oric::ErrorKind::kInvalidArgument: return ORIC_ERR_INVALID_ARGUMENT;
    case oric::ErrorKind::kValidation: return ORIC_ERR_VALIDATION;
    case oric::ErrorKind::kParse: return ORIC_ERR_PARSE;
    case oric::ErrorKind::kIo: return ORIC_ERR_IO;
    case oric::ErrorKind::kUndefinedMetric: return ORIC_ERR_UNDEFINED_METRIC;
    case oric::ErrorKind::kTraining: return ORIC_ERR_TRAINING;
  }
  return ORIC_ERR_INTERNAL;
}

template <typename F>
oric_status guarded(F&& body) {
  try {
    body();
    return ORIC_OK;
  } catch (const oric::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ORIC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return ORIC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw oric::InvalidArgument(std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

oric::ExperimentConfig parse_config(const char* config_json, const oric_dataset* dataset) {
  require(config_json, "config_json");
  // A caller-supplied dataset stands in for the config's data section.
  return oric::experiment_config_from_json(config_json, dataset == nullptr);
}

oric::Dataset resolve_dataset(const oric::ExperimentConfig& config, const oric_dataset* dataset) {
  return dataset ? dataset->value : oric::load_experiment_dataset(config);
}

// Rewards reordered to dataset positions by image id.
std::vector<oric::RewardRecord> aligned_rewards(const oric::Dataset& dataset,
                                                const std::vector<oric::RewardRecord>& rewards) {
  std::unordered_map<oric::ImageId, const oric::RewardRecord*> by_id;
  for (const auto& r : rewards) by_id.emplace(r.image_id, &r);
  std::vector<oric::RewardRecord> out;
  out.reserve(dataset.size());
  for (const auto& img : dataset.images) {
    auto it = by_id.find(img.image_id);
    if (it == by_id.end()) {
      throw oric::ValidationError("rewards have no record for image " + std::to_string(img.image_id));
    }
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace

extern "C" {

const char* oric_version(void) { return "0.1.0"; }

const char* oric_last_error(void) { return last_error.c_str(); }

const char* oric_status_name(oric_status status) {
  switch (status) {
    case ORIC_OK: return "ok";
    case ORIC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case ORIC_ERR_VALIDATION: return "validation";
    case ORIC_ERR_PARSE: return "parse";
    case ORIC_ERR_IO: return "io";
    case ORIC_ERR_UNDEFINED_METRIC: return "undefined_metric";
    case ORIC_ERR_TRAINING: return "training";
    case ORIC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void oric_string_free(char* str) { std::free(str); }

oric_status oric_dataset_load(const char* gt_path, const char* weak_path, const char* strong_path,
                              oric_dataset** out) {
  return guarded([&] {
    require(gt_path, "gt_path");
    require(weak_path, "weak_path");
    require(out, "out");
    *out = new oric_dataset{oric::load_dataset(gt_path, weak_path, str_or_empty(strong_path))};
  });
}

oric_status oric_dataset_parse(const char* gt_json, const char* weak_json, const char* strong_json,
                               oric_dataset** out) {
  return guarded([&] {
    require(gt_json, "gt_json");
    require(weak_json, "weak_json");
    require(out, "out");
    *out = new oric_dataset{oric::parse_dataset(gt_json, weak_json, strong_json ? strong_json : "[]")};
  });
}

oric_status oric_dataset_synth(const char* spec_json, oric_dataset** out, char** warnings_json) {
  return guarded([&] {
    require(out, "out");
    const auto spec = oric::synth_spec_from_json(spec_json ? spec_json : "{}");
    auto ds = std::make_unique<oric_dataset>(oric_dataset{oric::generate(spec)});
    if (warnings_json) *warnings_json = copy_string(ordered_json(oric::check_profiles(spec)).dump());
    *out = ds.release();
  });
}

oric_status oric_dataset_save(const oric_dataset* dataset, const char* gt_path, const char* weak_path,
                              const char* strong_path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(gt_path, "gt_path");
    require(weak_path, "weak_path");
    require(strong_path, "strong_path");
    oric::save_dataset(dataset->value, gt_path, weak_path, strong_path);
  });
}

void oric_dataset_free(oric_dataset* dataset) { delete dataset; }

size_t oric_dataset_size(const oric_dataset* dataset) { return dataset ? dataset->value.size() : 0; }

size_t oric_dataset_num_classes(const oric_dataset* dataset) { return dataset ? dataset->value.num_classes() : 0; }

oric_status oric_dataset_image_id(const oric_dataset* dataset, size_t index, int64_t* out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    if (index >= dataset->value.size()) throw oric::InvalidArgument("image index out of range");
    *out = dataset->value.images[index].image_id;
  });
}

oric_status oric_evaluate(const oric_dataset* dataset, oric_detector detector, double iou_threshold,
                          char** report_json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(report_json, "report_json");
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
      throw oric::InvalidArgument("iou_threshold must be in (0, 1]");
    }
    const auto& ds = dataset->value;
    const auto which = detector == ORIC_STRONG ? oric::DetectorKind::kStrong : oric::DetectorKind::kWeak;
    const auto states = oric::evaluate_images(ds.images, which, iou_threshold);
    ordered_json j;
    const auto map = oric::try_mean_ap(states);
    j["map"] = map ? ordered_json(*map) : ordered_json(nullptr);
    j["classes"] = ordered_json::array();
    const auto per_class = oric::per_class_ap(states);
    for (oric::ClassId c = 0; c < static_cast<oric::ClassId>(ds.num_classes()); ++c) {
      ordered_json e;
      e["class_id"] = c;
      e["category_id"] = ds.category_ids[static_cast<std::size_t>(c)];
      e["name"] = ds.classes[static_cast<std::size_t>(c)];
      e["num_ground_truth"] = 0;
      e["num_detections"] = 0;
      e["ap"] = nullptr;
      for (const auto& pc : per_class) {
        if (pc.class_id != c) continue;
        e["num_ground_truth"] = pc.num_ground_truth;
        e["num_detections"] = pc.num_detections;
        if (pc.ap) e["ap"] = *pc.ap;
      }
      j["classes"].push_back(std::move(e));
    }
    *report_json = copy_string(j.dump());
  });
}

oric_status oric_rewards_compute(const oric_dataset* dataset, size_t context_size, uint64_t context_seed,
                                 unsigned threads, oric_reward_set** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    oric::RewardOptions options;
    options.threads = threads;
    *out = new oric_reward_set{oric::compute_rewards(dataset->value, {context_size, context_seed}, options)};
  });
}

oric_status oric_rewards_load(const char* path, oric_reward_set** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new oric_reward_set{oric::load_rewards(path)};
  });
}

oric_status oric_rewards_save(const oric_reward_set* rewards, const char* path) {
  return guarded([&] {
    require(rewards, "rewards");
    require(path, "path");
    oric::save_rewards(path, rewards->value);
  });
}

oric_status oric_rewards_to_ndjson(const oric_reward_set* rewards, char** ndjson) {
  return guarded([&] {
    require(rewards, "rewards");
    require(ndjson, "ndjson");
    std::string text;
    for (const auto& r : rewards->value) text += oric::reward_to_line(r) + "\n";
    *ndjson = copy_string(text);
  });
}

void oric_rewards_free(oric_reward_set* rewards) { delete rewards; }

size_t oric_rewards_size(const oric_reward_set* rewards) { return rewards ? rewards->value.size() : 0; }

oric_status oric_rewards_get(const oric_reward_set* rewards, size_t index, oric_reward* out) {
  return guarded([&] {
    require(rewards, "rewards");
    require(out, "out");
    if (index >= rewards->value.size()) throw oric::InvalidArgument("reward index out of range");
    const auto& r = rewards->value[index];
    *out = oric_reward{r.image_id, r.ori,           r.oric, r.moric, r.estimate.value_or(0.0), r.estimate ? 1 : 0,
                       r.oric_unscaled, r.no_ground_truth ? 1 : 0};
  });
}

oric_status oric_rewards_set_estimates(oric_reward_set* rewards, const double* estimates, size_t count) {
  return guarded([&] {
    require(rewards, "rewards");
    require(estimates, "estimates");
    if (count != rewards->value.size()) throw oric::InvalidArgument("estimate count differs from record count");
    for (size_t i = 0; i < count; ++i) rewards->value[i].estimate = estimates[i];
  });
}

oric_status oric_model_train(const oric_dataset* dataset, const oric_reward_set* rewards,
                             const char* train_config_json, oric_model** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(rewards, "rewards");
    require(out, "out");
    const auto config = train_config_json ? oric::train_config_from_json(train_config_json) : oric::TrainConfig{};
    const auto records = aligned_rewards(dataset->value, rewards->value);
    const auto targets = oric::training_targets(records, config.target);
    const auto features = oric::extract_dataset_features(dataset->value);
    *out = new oric_model{oric::train(features, targets, config)};
  });
}

oric_status oric_model_load(const char* path, oric_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new oric_model{oric::load_model(path)};
  });
}

oric_status oric_model_save(const oric_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    oric::save_model(path, model->value);
  });
}

void oric_model_free(oric_model* model) { delete model; }

oric_status oric_model_predict(const oric_model* model, const oric_dataset* dataset, double* out, size_t count) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    if (count != dataset->value.size()) throw oric::InvalidArgument("output length differs from dataset size");
    const auto features = oric::extract_dataset_features(dataset->value);
    for (size_t i = 0; i < count; ++i) out[i] = oric::predict(model->value, features[i]);
  });
}

oric_status oric_cross_validate(const oric_dataset* dataset, size_t context_size, uint64_t context_seed,
                                const char* train_config_json, size_t folds, unsigned threads,
                                oric_reward_set** out, char** report_json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const auto& ds = dataset->value;
    if (folds < 2 || folds > ds.size()) throw oric::InvalidArgument("folds must be in [2, N]");
    const auto config = train_config_json ? oric::train_config_from_json(train_config_json) : oric::TrainConfig{};
    oric::RewardOptions options;
    options.threads = threads;
    const oric::ContextSpec context{context_size, context_seed};
    const auto cv = oric::cross_validate(ds, context, config, folds, options);
    auto rewards = oric::compute_rewards(ds, {std::min(context_size, ds.size()), context_seed}, options);
    for (std::size_t i = 0; i < rewards.size(); ++i) rewards[i].estimate = cv.estimates[i];
    std::string report;
    if (report_json) {
      ordered_json j;
      j["folds"] = folds;
      j["target"] = oric::to_string(config.target);
      j["spearman"] = oric::spearman(cv.estimates, oric::training_targets(rewards, config.target));
      j["fold_sizes"] = ordered_json::array();
      for (const auto& f : cv.folds) j["fold_sizes"].push_back(f.test_indices.size());
      report = j.dump();
    }
    auto set = std::make_unique<oric_reward_set>(oric_reward_set{std::move(rewards)});
    if (report_json) *report_json = copy_string(report);
    *out = set.release();
  });
}

oric_status oric_config_load(const char* path, char** config_json) {
  return guarded([&] {
    require(path, "path");
    require(config_json, "config_json");
    *config_json = copy_string(oric::experiment_config_to_json(oric::load_experiment_config(path, false)));
  });
}

oric_status oric_sweep(const char* config_json, const oric_dataset* dataset, char** sweep_csv) {
  return guarded([&] {
    const auto config = parse_config(config_json, dataset);
    const auto ds = resolve_dataset(config, dataset);
    const auto output = oric::run_sweep(ds, config);
    if (!config.output_dir.empty()) oric::write_sweep_outputs(output, config.output_dir);
    if (sweep_csv) *sweep_csv = copy_string(oric::results_to_csv(output.results));
  });
}

oric_status oric_error_report(const char* config_json, const oric_dataset* dataset, char** csv) {
  return guarded([&] {
    require(csv, "csv");
    const auto config = parse_config(config_json, dataset);
    const auto rows = oric::error_report(resolve_dataset(config, dataset), config);
    *csv = copy_string(oric::error_rows_to_csv(rows));
  });
}

oric_status oric_error_report_plan(const oric_dataset* dataset, const int64_t* offloaded_ids, size_t count,
                                   const char* name, char** csv) {
  return guarded([&] {
    require(dataset, "dataset");
    require(csv, "csv");
    if (count > 0) require(offloaded_ids, "offloaded_ids");
    const auto& ds = dataset->value;
    std::vector<bool> mask(ds.size(), false);
    for (size_t k = 0; k < count; ++k) {
      const auto pos = ds.index_of(offloaded_ids[k]);
      if (pos < 0) throw oric::ValidationError("plan references unknown image id " + std::to_string(offloaded_ids[k]));
      mask[static_cast<std::size_t>(pos)] = true;
    }
    const auto rows = oric::error_rows(name ? name : "plan", ds, mask);
    *csv = copy_string(oric::error_rows_to_csv(rows));
  });
}

oric_status oric_grid_search(const char* config_json, const oric_dataset* dataset, char** grid_csv) {
  return guarded([&] {
    require(grid_csv, "grid_csv");
    const auto config = parse_config(config_json, dataset);
    const auto result = oric::run_grid_search(resolve_dataset(config, dataset), config);
    *grid_csv = copy_string(oric::grid_to_csv(result));
  });
}

}  // extern "C"
