// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through oric.h.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oric/oric.h"

namespace {

using json = nlohmann::ordered_json;

// Thrown for failures detected in this file; carries the exit code.
struct Failure {
  int code;
  std::string kind;
  std::string message;
};

int exit_code(oric_status s) {
  switch (s) {
    case ORIC_OK: return 0;
    case ORIC_ERR_IO: return 3;
    case ORIC_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

void check(oric_status s) {
  if (s != ORIC_OK) throw Failure{exit_code(s), oric_status_name(s), oric_last_error()};
}

struct DatasetDeleter {
  void operator()(oric_dataset* p) const { oric_dataset_free(p); }
};
struct RewardsDeleter {
  void operator()(oric_reward_set* p) const { oric_rewards_free(p); }
};
struct ModelDeleter {
  void operator()(oric_model* p) const { oric_model_free(p); }
};
using DatasetPtr = std::unique_ptr<oric_dataset, DatasetDeleter>;
using RewardsPtr = std::unique_ptr<oric_reward_set, RewardsDeleter>;
using ModelPtr = std::unique_ptr<oric_model, ModelDeleter>;

// Owns a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  oric_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{3, "io", "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{3, "io", "cannot write '" + path + "'"};
  out << text;
  if (!out) throw Failure{3, "io", "failed writing '" + path + "'"};
}

std::string number(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

struct DataFlags {
  std::string gt, weak, strong;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool need_strong) {
  cmd->add_option("--gt", f.gt, "COCO-style ground-truth annotations");
  cmd->add_option("--weak,--dets", f.weak, "Weak-detector detections (COCO results list)");
  if (need_strong) cmd->add_option("--strong", f.strong, "Strong-detector detections");
}

DatasetPtr load(const DataFlags& f, bool need_strong) {
  if (f.gt.empty() || f.weak.empty()) throw Failure{2, "validation", "--gt and --weak are required"};
  if (need_strong && f.strong.empty()) throw Failure{2, "validation", "--strong is required"};
  oric_dataset* ds = nullptr;
  check(oric_dataset_load(f.gt.c_str(), f.weak.c_str(), f.strong.empty() ? nullptr : f.strong.c_str(), &ds));
  return DatasetPtr(ds);
}

void save_rewards(const oric_reward_set* rewards, const std::string& out) {
  if (out.empty() || out == "-") {
    char* text = nullptr;
    check(oric_rewards_to_ndjson(rewards, &text));
    std::cout << take(text);
  } else {
    check(oric_rewards_save(rewards, out.c_str()));
  }
}

std::vector<std::int64_t> image_ids(const oric_dataset* ds) {
  std::vector<std::int64_t> ids(oric_dataset_size(ds));
  for (std::size_t i = 0; i < ids.size(); ++i) check(oric_dataset_image_id(ds, i, &ids[i]));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offloading-reward toolkit for weak/strong detector pairs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(oric_version()));
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores; ORIC_THREADS caps it)");

  DataFlags data;
  std::string out;
  std::string config_path;
  std::size_t context_size = 1000;
  std::uint64_t context_seed = 0;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::vector<double> ratios;
  std::vector<std::string> policies;
  double iou = 0.5;
  std::string rewards_path, model_path, cv_out, plan_path;
  std::size_t folds = 0;
  std::optional<std::size_t> num_images;

  auto* evaluate = app.add_subcommand("evaluate", "mAP and per-class AP of one detection file");
  add_data_flags(evaluate, data, false);
  evaluate->add_option("--iou", iou, "IoU threshold for a true positive");
  evaluate->add_option("--out", out, "Write the JSON report here");

  auto* reward = app.add_subcommand("reward", "Per-image ORI, ORIC and MORIC");
  add_data_flags(reward, data, true);
  reward->add_option("--context-size", context_size, "Context images sampled per reward");
  reward->add_option("--context-seed", context_seed, "Context sampling seed");
  reward->add_option("--out", out, "Reward file (NDJSON); stdout when omitted");

  auto* train = app.add_subcommand("train", "Fit the reward estimator on weak-detector output");
  add_data_flags(train, data, true);
  train->add_option("--rewards", rewards_path, "Precomputed reward file (computed when omitted)");
  train->add_option("--context-size", context_size, "Context images sampled per reward");
  train->add_option("--context-seed", context_seed, "Context sampling seed");
  train->add_option("--config", config_path, "Train config JSON");
  train->add_option("--seed", seed, "Training seed (overrides the config)");
  train->add_option("--folds", folds, "Also run K-fold cross-validation");
  train->add_option("--cv-out", cv_out, "Reward file with out-of-fold estimates");
  train->add_option("--out", out, "Model file")->required();

  auto* predict = app.add_subcommand("predict", "Estimate rewards with a trained model");
  add_data_flags(predict, data, false);
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--rewards", rewards_path, "Attach estimates to this reward file");
  predict->add_option("--out", out, "Output NDJSON; stdout when omitted");

  auto* sweep = app.add_subcommand("sweep", "System mAP against offloading ratio per policy");
  add_data_flags(sweep, data, true);
  sweep->add_option("--config", config_path, "Experiment config JSON");
  sweep->add_option("--policy", policies, "Policies (repeat or comma-separate)")->delimiter(',');
  sweep->add_option("--ratios", ratios, "Offloading ratios, comma-separated")->delimiter(',');
  sweep->add_option("--ratio", ratio, "A single offloading ratio");
  sweep->add_option("--seed", seed, "Single seed for random baselines and training");
  sweep->add_option("--context-size", context_size, "Context images sampled per reward");
  sweep->add_option("--context-seed", context_seed, "Context sampling seed");
  sweep->add_option("--out", out, "Output directory")->required();

  auto* errors = app.add_subcommand("errors", "Six-category error breakdown");
  add_data_flags(errors, data, true);
  errors->add_option("--config", config_path, "Experiment config JSON");
  errors->add_option("--ratio", ratio, "Offloading ratio of the oracle plans");
  errors->add_option("--plan", plan_path, "File of offloaded image ids; report that plan only");
  errors->add_option("--context-size", context_size, "Context images sampled per reward");
  errors->add_option("--context-seed", context_seed, "Context sampling seed");
  errors->add_option("--out", out, "CSV output; stdout when omitted");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--config", config_path, "Synth spec JSON");
  synth->add_option("--seed", seed, "Generator seed (overrides the spec)");
  synth->add_option("--num-images", num_images, "Image count (overrides the spec)");
  synth->add_option("--out", out, "Output directory for gt.json, weak.json, strong.json")->required();

  auto* grid = app.add_subcommand("grid-search", "Cross-validated grid search over train configs");
  add_data_flags(grid, data, true);
  grid->add_option("--config", config_path, "Experiment config JSON with a grid section")->required();
  grid->add_option("--out", out, "CSV output; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: kind=usage message=" << e.what() << "\n";
    return 2;
  }

  // Experiment config JSON from --config (paths resolved) plus flag overrides.
  const auto experiment_json = [&](bool needs_output) {
    json j = json::object();
    if (!config_path.empty()) {
      char* text = nullptr;
      check(oric_config_load(config_path.c_str(), &text));
      j = json::parse(take(text));
    }
    if (!data.gt.empty() || !data.weak.empty() || !data.strong.empty()) {
      j.erase("synth");
      j["dataset"] = {{"gt", data.gt}, {"weak", data.weak}, {"strong", data.strong}};
    }
    auto* cmd = app.get_subcommands().front();
    const auto given = [&](const char* name) {
      const auto* opt = cmd->get_option_no_throw(name);
      return opt && opt->count() > 0;
    };
    const bool has_context = cmd->get_option_no_throw("--context-size") != nullptr;
    if (has_context && (config_path.empty() || given("--context-size") || given("--context-seed"))) {
      if (!j.contains("context")) j["context"] = json::object();
      if (config_path.empty() || given("--context-size")) j["context"]["size"] = context_size;
      if (config_path.empty() || given("--context-seed")) j["context"]["seed"] = context_seed;
    }
    if (!policies.empty()) j["policies"] = policies;
    if (ratio) j["ratios"] = std::vector<double>{*ratio};
    if (!ratios.empty()) j["ratios"] = ratios;
    if (seed) {
      j["seeds"] = std::vector<std::uint64_t>{*seed};
      if (!j.contains("train")) j["train"] = json::object();
      j["train"]["seed"] = *seed;
    }
    if (needs_output) j["output_dir"] = out;
    if (threads) j["threads"] = threads;
    return j;
  };

  try {
    if (*evaluate) {
      const auto ds = load(data, false);
      char* report = nullptr;
      check(oric_evaluate(ds.get(), ORIC_WEAK, iou, &report));
      const std::string text = take(report);
      const auto j = json::parse(text);
      std::cout << "map " << (j["map"].is_null() ? "undefined" : number(j["map"].get<double>())) << "\n";
      for (const auto& c : j["classes"]) {
        std::cout << "class " << c["category_id"].get<std::int64_t>() << ' ' << c["name"].get<std::string>()
                  << " ap " << (c["ap"].is_null() ? "undefined" : number(c["ap"].get<double>())) << " gt "
                  << c["num_ground_truth"].get<std::size_t>() << " dets " << c["num_detections"].get<std::size_t>()
                  << "\n";
      }
      if (!out.empty()) write_output(out, text + "\n");
    } else if (*reward) {
      const auto ds = load(data, true);
      oric_reward_set* rs = nullptr;
      check(oric_rewards_compute(ds.get(), context_size, context_seed, threads, &rs));
      const RewardsPtr rewards(rs);
      save_rewards(rewards.get(), out);
    } else if (*train) {
      const auto ds = load(data, true);
      json tc = json::object();
      if (!config_path.empty()) tc = json::parse(read_file(config_path), nullptr, true);
      if (seed) tc["seed"] = *seed;
      const std::string tc_text = tc.dump();
      RewardsPtr rewards;
      oric_reward_set* rs = nullptr;
      if (!rewards_path.empty()) {
        check(oric_rewards_load(rewards_path.c_str(), &rs));
      } else {
        check(oric_rewards_compute(ds.get(), context_size, context_seed, threads, &rs));
      }
      rewards.reset(rs);
      oric_model* m = nullptr;
      check(oric_model_train(ds.get(), rewards.get(), tc_text.c_str(), &m));
      const ModelPtr model(m);
      check(oric_model_save(model.get(), out.c_str()));
      if (folds > 0) {
        oric_reward_set* cv = nullptr;
        char* report = nullptr;
        check(oric_cross_validate(ds.get(), context_size, context_seed, tc_text.c_str(), folds, threads, &cv,
                                  &report));
        const RewardsPtr cv_rewards(cv);
        std::cout << take(report) << "\n";
        if (!cv_out.empty()) check(oric_rewards_save(cv_rewards.get(), cv_out.c_str()));
      }
    } else if (*predict) {
      const auto ds = load(data, false);
      oric_model* m = nullptr;
      check(oric_model_load(model_path.c_str(), &m));
      const ModelPtr model(m);
      std::vector<double> estimates(oric_dataset_size(ds.get()));
      check(oric_model_predict(model.get(), ds.get(), estimates.data(), estimates.size()));
      const auto ids = image_ids(ds.get());
      if (!rewards_path.empty()) {
        oric_reward_set* rs = nullptr;
        check(oric_rewards_load(rewards_path.c_str(), &rs));
        const RewardsPtr rewards(rs);
        std::map<std::int64_t, double> by_id;
        for (std::size_t i = 0; i < ids.size(); ++i) by_id[ids[i]] = estimates[i];
        std::vector<double> aligned(oric_rewards_size(rewards.get()));
        for (std::size_t k = 0; k < aligned.size(); ++k) {
          oric_reward r;
          check(oric_rewards_get(rewards.get(), k, &r));
          const auto it = by_id.find(r.image_id);
          if (it == by_id.end()) {
            throw Failure{2, "validation", "reward file names image " + std::to_string(r.image_id) +
                                               " which is not in the dataset"};
          }
          aligned[k] = it->second;
        }
        check(oric_rewards_set_estimates(rewards.get(), aligned.data(), aligned.size()));
        save_rewards(rewards.get(), out);
      } else {
        std::string text;
        for (std::size_t i = 0; i < estimates.size(); ++i) {
          text += json{{"image_id", ids[i]}, {"estimate", estimates[i]}}.dump() + "\n";
        }
        write_output(out, text);
      }
    } else if (*sweep) {
      const std::string cfg = experiment_json(true).dump();
      char* csv = nullptr;
      check(oric_sweep(cfg.c_str(), nullptr, &csv));
      std::cout << take(csv);
    } else if (*errors) {
      if (!plan_path.empty()) {
        const auto ds = load(data, true);
        std::vector<std::int64_t> ids;
        std::istringstream in(read_file(plan_path));
        for (std::string tok; in >> tok;) {
          try {
            ids.push_back(std::stoll(tok));
          } catch (const std::exception&) {
            throw Failure{2, "parse", plan_path + ": not an image id: '" + tok + "'"};
          }
        }
        char* csv = nullptr;
        check(oric_error_report_plan(ds.get(), ids.data(), ids.size(), "plan", &csv));
        write_output(out, take(csv));
      } else {
        json j = experiment_json(false);
        if (ratio) {
          j.erase("ratios");
          if (!j.contains("errors")) j["errors"] = json::object();
          j["errors"]["ratio"] = *ratio;
        }
        const std::string cfg = j.dump();
        char* csv = nullptr;
        check(oric_error_report(cfg.c_str(), nullptr, &csv));
        write_output(out, take(csv));
      }
    } else if (*synth) {
      json spec = json::object();
      if (!config_path.empty()) spec = json::parse(read_file(config_path), nullptr, true);
      if (seed) spec["seed"] = *seed;
      if (num_images) spec["num_images"] = *num_images;
      const std::string text = spec.dump();
      oric_dataset* d = nullptr;
      char* warnings = nullptr;
      check(oric_dataset_synth(text.c_str(), &d, &warnings));
      const DatasetPtr ds(d);
      for (const auto& w : json::parse(take(warnings))) std::cerr << "warning: " << w.get<std::string>() << "\n";
      std::error_code ec;
      std::filesystem::create_directories(out, ec);
      if (ec) throw Failure{3, "io", "cannot create '" + out + "': " + ec.message()};
      const std::filesystem::path dir(out);
      check(oric_dataset_save(ds.get(), (dir / "gt.json").c_str(), (dir / "weak.json").c_str(),
                              (dir / "strong.json").c_str()));
      std::cout << "images " << oric_dataset_size(ds.get()) << " classes " << oric_dataset_num_classes(ds.get())
                << "\n";
    } else if (*grid) {
      const std::string cfg = experiment_json(false).dump();
      char* csv = nullptr;
      check(oric_grid_search(cfg.c_str(), nullptr, &csv));
      write_output(out, take(csv));
    }
  } catch (const Failure& f) {
    std::cerr << "error: kind=" << f.kind << " message=" << f.message << "\n";
    return f.code;
  } catch (const json::exception& e) {
    std::cerr << "error: kind=parse message=" << e.what() << "\n";
    return 2;
  }
  return 0;
}
