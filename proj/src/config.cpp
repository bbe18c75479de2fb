// SPDX-License-Identifier: Apache-2.0
#include "oric/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oric/error.hpp"

namespace oric {
namespace {

using ordered_json = nlohmann::ordered_json;

void reject_unknown(const ordered_json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

const char* interpolation_name(Interpolation i) {
  return i == Interpolation::kElevenPoint ? "11-point" : "all-point";
}

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "all-point") return Interpolation::kAllPoint;
  if (s == "11-point") return Interpolation::kElevenPoint;
  throw ValidationError("evaluator.interpolation must be 'all-point' or '11-point', got '" + s + "'");
}

template <typename T>
void read(const ordered_json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

ordered_json grid_to_json(const TrainGrid& g) {
  ordered_json j = ordered_json::object();
  if (!g.hidden.empty()) j["hidden"] = g.hidden;
  if (!g.learning_rate.empty()) j["learning_rate"] = g.learning_rate;
  if (!g.momentum.empty()) j["momentum"] = g.momentum;
  if (!g.epochs.empty()) j["epochs"] = g.epochs;
  if (!g.batch_size.empty()) j["batch_size"] = g.batch_size;
  if (!g.weighted.empty()) j["weighted"] = g.weighted;
  return j;
}

TrainGrid grid_from_json(const ordered_json& j) {
  reject_unknown(j, {"hidden", "learning_rate", "momentum", "epochs", "batch_size", "weighted"}, "grid");
  TrainGrid g;
  read(j, "hidden", g.hidden);
  read(j, "learning_rate", g.learning_rate);
  read(j, "momentum", g.momentum);
  read(j, "epochs", g.epochs);
  read(j, "batch_size", g.batch_size);
  read(j, "weighted", g.weighted);
  return g;
}

template <typename T>
std::vector<T> or_base(const std::vector<T>& list, const T& base) {
  return list.empty() ? std::vector<T>{base} : list;
}

}  // namespace

std::vector<TrainConfig> expand_grid(const TrainConfig& base, const TrainGrid& grid) {
  std::vector<TrainConfig> out;
  for (const auto& hidden : or_base(grid.hidden, base.hidden)) {
    for (double lr : or_base(grid.learning_rate, base.learning_rate)) {
      for (double mom : or_base(grid.momentum, base.momentum)) {
        for (std::size_t ep : or_base(grid.epochs, base.epochs)) {
          for (std::size_t bs : or_base(grid.batch_size, base.batch_size)) {
            for (bool w : or_base(grid.weighted, base.weighted)) {
              TrainConfig c = base;
              c.hidden = hidden;
              c.learning_rate = lr;
              c.momentum = mom;
              c.epochs = ep;
              c.batch_size = bs;
              c.weighted = w;
              out.push_back(c);
            }
          }
        }
      }
    }
  }
  return out;
}

void validate(const ExperimentConfig& c, bool require_dataset) {
  const bool has_files = !c.gt_path.empty() || !c.weak_path.empty() || !c.strong_path.empty();
  if (has_files && c.synth) throw ValidationError("config: give either dataset files or a synth spec, not both");
  if (require_dataset && !has_files && !c.synth) throw ValidationError("config: a dataset (gt/weak/strong) or a synth spec is required");
  if (has_files && (c.gt_path.empty() || c.weak_path.empty() || c.strong_path.empty())) {
    throw ValidationError("config: dataset needs gt, weak and strong paths");
  }
  if (c.synth) validate(*c.synth);
  validate(c.train);
  for (const auto& t : expand_grid(c.train, c.grid)) validate(t);
  if (c.policies.empty()) throw ValidationError("config: policies must not be empty");
  const auto& known = known_policies();
  for (const auto& p : c.policies) {
    if (std::find(known.begin(), known.end(), p) == known.end()) {
      throw ValidationError("config: unknown policy '" + p + "'");
    }
  }
  if (c.ratios.empty()) throw ValidationError("config: ratios must not be empty");
  for (double r : c.ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("config: ratios must lie in [0, 1]");
  }
  if (c.seeds.empty()) throw ValidationError("config: seeds must not be empty");
  if (c.folds < 2) throw ValidationError("config: folds must be >= 2");
  if (!(c.eval.iou_threshold > 0.0 && c.eval.iou_threshold <= 1.0)) {
    throw ValidationError("config: evaluator.iou_threshold must be in (0, 1]");
  }
  const auto& e = c.error_thresholds;
  if (!(e.bg_iou >= 0.0 && e.bg_iou <= e.fg_iou && e.fg_iou <= 1.0)) {
    throw ValidationError("config: errors need 0 <= bg_iou <= fg_iou <= 1");
  }
  if (!(c.error_ratio >= 0.0 && c.error_ratio <= 1.0)) throw ValidationError("config: errors.ratio must be in [0, 1]");
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  if (c.synth) {
    j["synth"] = ordered_json::parse(synth_spec_to_json(*c.synth));
  } else {
    j["dataset"] = {{"gt", c.gt_path}, {"weak", c.weak_path}, {"strong", c.strong_path}};
  }
  j["context"] = {{"size", c.context.size}, {"seed", c.context.seed}};
  j["train"] = ordered_json::parse(train_config_to_json(c.train));
  j["grid"] = grid_to_json(c.grid);
  j["policies"] = c.policies;
  j["ratios"] = c.ratios;
  j["seeds"] = c.seeds;
  j["folds"] = c.folds;
  j["output_dir"] = c.output_dir;
  j["evaluator"] = {{"iou_threshold", c.eval.iou_threshold}, {"interpolation", interpolation_name(c.eval.interpolation)}};
  j["errors"] = {{"fg_iou", c.error_thresholds.fg_iou},
                 {"bg_iou", c.error_thresholds.bg_iou},
                 {"ratio", c.error_ratio}};
  j["threads"] = c.threads;
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text, bool require_dataset) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError("config: malformed JSON at byte " + std::to_string(e.byte));
  }
  reject_unknown(j, {"dataset", "synth", "context", "train", "grid", "policies", "ratios", "seeds", "folds",
                     "output_dir", "evaluator", "errors", "threads"},
                 "config");
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      reject_unknown(d, {"gt", "weak", "strong"}, "dataset");
      read(d, "gt", c.gt_path);
      read(d, "weak", c.weak_path);
      read(d, "strong", c.strong_path);
    }
    if (j.contains("synth")) c.synth = synth_spec_from_json(j["synth"].dump());
    if (j.contains("context")) {
      const auto& x = j["context"];
      reject_unknown(x, {"size", "seed"}, "context");
      read(x, "size", c.context.size);
      read(x, "seed", c.context.seed);
    }
    if (j.contains("train")) c.train = train_config_from_json(j["train"].dump());
    if (j.contains("grid")) c.grid = grid_from_json(j["grid"]);
    read(j, "policies", c.policies);
    read(j, "ratios", c.ratios);
    read(j, "seeds", c.seeds);
    read(j, "folds", c.folds);
    read(j, "output_dir", c.output_dir);
    if (j.contains("evaluator")) {
      const auto& x = j["evaluator"];
      reject_unknown(x, {"iou_threshold", "interpolation"}, "evaluator");
      read(x, "iou_threshold", c.eval.iou_threshold);
      if (x.contains("interpolation")) c.eval.interpolation = interpolation_from_string(x["interpolation"].get<std::string>());
    }
    if (j.contains("errors")) {
      const auto& x = j["errors"];
      reject_unknown(x, {"fg_iou", "bg_iou", "ratio"}, "errors");
      read(x, "fg_iou", c.error_thresholds.fg_iou);
      read(x, "bg_iou", c.error_thresholds.bg_iou);
      read(x, "ratio", c.error_ratio);
    }
    read(j, "threads", c.threads);
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  validate(c, require_dataset);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path, bool require_dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c;
  try {
    c = experiment_config_from_json(ss.str(), require_dataset);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  // Dataset paths are relative to the config file.
  const auto base = std::filesystem::path(path).parent_path();
  for (auto* p : {&c.gt_path, &c.weak_path, &c.strong_path}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  }
  return c;
}

}  // namespace oric
