// SPDX-License-Identifier: Apache-2.0
#include "oric/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "oric/error.hpp"
#include "oric/estimator.hpp"
#include "oric/format.hpp"
#include "oric/parallel.hpp"
#include "oric/rng.hpp"
#include "oric/stats.hpp"
#include "oric/synth.hpp"

namespace oric {
namespace {

using ordered_json = nlohmann::ordered_json;

double normalize(double map, double weak, double strong) {
  if (strong == weak) return std::numeric_limits<double>::quiet_NaN();
  return (map - weak) / (strong - weak);
}

bool is_estimator(const std::string& policy) { return policy.rfind("estimator", 0) == 0; }

TrainConfig estimator_config(const std::string& policy, const TrainConfig& base) {
  TrainConfig c = base;
  if (policy == "estimator-mori") {
    c.target = TargetKind::kMori;
  } else if (policy == "estimator-ori") {
    c.target = TargetKind::kOri;
    c.weighted = false;
  } else if (policy == "estimator-vanilla") {
    c.target = TargetKind::kOric;
    c.weighted = false;
  }
  return c;
}

RewardOptions reward_options(const ExperimentConfig& config) {
  RewardOptions o;
  o.eval = config.eval;
  o.threads = config.threads;
  return o;
}

ContextSpec capped_context(const ContextSpec& spec, std::size_t n) { return {std::min(spec.size, n), spec.seed}; }

std::vector<ScoredImage> scored(const Dataset& dataset, const std::vector<double>& scores,
                                std::span<const std::size_t> subset) {
  std::vector<ScoredImage> out;
  out.reserve(subset.size());
  for (std::size_t i : subset) out.push_back({dataset.images[i].image_id, scores[i]});
  return out;
}

std::vector<bool> plan_mask(const Dataset& dataset, const OffloadPlan& plan) {
  std::vector<bool> mask(dataset.size(), false);
  std::map<ImageId, std::size_t> position;
  for (std::size_t i = 0; i < dataset.size(); ++i) position.emplace(dataset.images[i].image_id, i);
  for (ImageId id : plan.offloaded) {
    auto it = position.find(id);
    if (it == position.end()) throw ValidationError("plan references unknown image id " + std::to_string(id));
    mask[it->second] = true;
  }
  return mask;
}

std::vector<bool> dcsb_out_of_fold(const Dataset& dataset, const std::vector<std::size_t>& fold_of,
                                   std::size_t folds) {
  std::vector<bool> mask(dataset.size(), false);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<ImageRecord> train_images;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (fold_of[i] != f) train_images.push_back(dataset.images[i]);
    }
    const DcsbFit fit = fit_dcsb(train_images);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (fold_of[i] == f) mask[i] = dcsb_offloads(dataset.images[i], fit.thresholds);
    }
  }
  return mask;
}

struct ScoreSource {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<double> scores;  // per dataset position
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (config.synth) return generate(*config.synth);
  return load_dataset(config.gt_path, config.weak_path, config.strong_path);
}

SweepOutput run_sweep(const Dataset& dataset, const ExperimentConfig& config) {
  validate(dataset);
  const SystemEvaluator sys(dataset, config.eval);
  const RewardOptions options = reward_options(config);
  const auto has = [&](const std::string& p) {
    return std::find(config.policies.begin(), config.policies.end(), p) != config.policies.end();
  };

  SweepOutput out;
  out.weak_map = sys.weak_map();
  out.strong_map = sys.strong_map();
  out.rewards = compute_rewards(dataset, capped_context(config.context, dataset.size()), options);

  std::vector<ScoreSource> sources;
  bool estimate_attached = false;
  for (const auto& policy : config.policies) {
    ScoreSource src{policy, config.context.seed, {}};
    if (policy == "oracle-oric" || policy == "oracle-ori") {
      for (const auto& r : out.rewards) src.scores.push_back(policy == "oracle-oric" ? r.oric : r.ori);
    } else if (is_estimator(policy)) {
      const TrainConfig tc = estimator_config(policy, config.train);
      const auto cv = cross_validate(dataset, config.context, tc, config.folds, options);
      src.seed = tc.seed;
      src.scores = cv.estimates;
      if (!estimate_attached) {
        for (std::size_t i = 0; i < dataset.size(); ++i) out.rewards[i].estimate = cv.estimates[i];
        estimate_attached = true;
      }
    } else {
      continue;
    }
    sources.push_back(std::move(src));
  }

  const auto fold_of = assign_folds(dataset, config.folds, config.train.seed);
  std::vector<std::vector<std::size_t>> fold_members(config.folds);
  for (std::size_t i = 0; i < dataset.size(); ++i) fold_members[fold_of[i]].push_back(i);
  std::vector<std::size_t> everything(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) everything[i] = i;
  const std::vector<bool> dcsb_mask = has("dcsb") ? dcsb_out_of_fold(dataset, fold_of, config.folds)
                                                  : std::vector<bool>{};

  // Task list in canonical output order; each task fills one slot.
  struct Task {
    std::string policy;
    std::optional<std::size_t> fold;
    std::function<PolicyResult()> run;
  };
  std::vector<Task> tasks;

  const auto add_tasks = [&](std::optional<std::size_t> fold, std::span<const std::size_t> subset) {
    const std::vector<bool> none(dataset.size(), false);
    std::vector<bool> all(dataset.size(), false);
    for (std::size_t i : subset) all[i] = true;
    const double weak = fold ? sys.system_map(none, subset) : sys.weak_map();
    const double strong = fold ? sys.system_map(all, subset) : sys.strong_map();
    const auto eval_mask = [&sys, subset, weak, strong](const std::vector<bool>& mask, PolicyResult& r) {
      r.map = sys.system_map(mask, subset);
      r.normalized_map = normalize(r.map, weak, strong);
    };
    for (const auto& policy : config.policies) {
      if (policy == "random") {
        for (double ratio : config.ratios) {
          for (std::uint64_t seed : config.seeds) {
            tasks.push_back({policy, fold, [&dataset, subset, ratio, seed, fold, eval_mask] {
                               PolicyResult r{"random", ratio, seed, 0.0, 0.0};
                               Rng rng(fold ? derive_seed(seed, *fold) : seed);
                               const std::size_t k = budget_for_ratio(ratio, subset.size());
                               std::vector<bool> mask(dataset.size(), false);
                               for (std::size_t p : sample_without_replacement(subset.size(), k, rng)) {
                                 mask[subset[p]] = true;
                               }
                               eval_mask(mask, r);
                               return r;
                             }});
          }
        }
      } else if (policy == "dcsb") {
        tasks.push_back({policy, fold, [&dcsb_mask, &dataset, &config, subset, eval_mask] {
                           std::vector<bool> mask(dataset.size(), false);
                           std::size_t count = 0;
                           for (std::size_t i : subset) {
                             mask[i] = dcsb_mask[i];
                             count += dcsb_mask[i] ? 1 : 0;
                           }
                           const double ratio =
                               subset.empty() ? 0.0
                                              : static_cast<double>(count) / static_cast<double>(subset.size());
                           PolicyResult r{"dcsb", ratio, config.train.seed, 0.0, 0.0};
                           eval_mask(mask, r);
                           return r;
                         }});
      } else {
        const auto it = std::find_if(sources.begin(), sources.end(),
                                     [&](const ScoreSource& s) { return s.policy == policy; });
        for (double ratio : config.ratios) {
          tasks.push_back({policy, fold, [&dataset, src = &*it, subset, ratio, eval_mask] {
                             PolicyResult r{src->policy, ratio, src->seed, 0.0, 0.0};
                             const auto s = scored(dataset, src->scores, subset);
                             eval_mask(plan_mask(dataset, threshold_plan(s, ratio)), r);
                             return r;
                           }});
        }
      }
    }
  };
  add_tasks(std::nullopt, everything);
  for (std::size_t f = 0; f < config.folds; ++f) add_tasks(f, fold_members[f]);

  std::vector<PolicyResult> results(tasks.size());
  parallel_for(tasks.size(), worker_count(config.threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) results[t] = tasks[t].run();
  });
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].fold) {
      out.fold_results.push_back({*tasks[t].fold, std::move(results[t])});
    } else {
      out.results.push_back(std::move(results[t]));
    }
  }
  return out;
}

std::string fold_results_to_csv(std::span<const FoldPolicyResult> results) {
  std::ostringstream out;
  out << "fold,policy,ratio,seed,map,normalized_map\n";
  for (const auto& f : results) {
    const auto& r = f.result;
    out << f.fold << ',' << r.policy << ',' << format_number(r.ratio) << ',' << r.seed << ','
        << format_number(r.map) << ',' << format_number(r.normalized_map) << '\n';
  }
  return out.str();
}

std::string plot_data_json(const SweepOutput& output) {
  // Seed means per (policy, ratio), keeping first-seen order.
  struct Point {
    double ratio;
    double map_sum = 0.0;
    double norm_sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<std::pair<std::string, std::vector<Point>>> series;
  for (const auto& r : output.results) {
    auto s = std::find_if(series.begin(), series.end(), [&](const auto& e) { return e.first == r.policy; });
    if (s == series.end()) {
      series.push_back({r.policy, {}});
      s = std::prev(series.end());
    }
    auto p = std::find_if(s->second.begin(), s->second.end(), [&](const Point& q) { return q.ratio == r.ratio; });
    if (p == s->second.end()) {
      s->second.push_back({r.ratio});
      p = std::prev(s->second.end());
    }
    p->map_sum += r.map;
    p->norm_sum += r.normalized_map;
    ++p->count;
  }
  ordered_json j;
  j["weak_map"] = output.weak_map;
  j["strong_map"] = output.strong_map;
  j["series"] = ordered_json::array();
  for (const auto& [policy, points] : series) {
    ordered_json s;
    s["policy"] = policy;
    s["ratio"] = ordered_json::array();
    s["map"] = ordered_json::array();
    s["normalized_map"] = ordered_json::array();
    for (const auto& p : points) {
      const double n = static_cast<double>(p.count);
      s["ratio"].push_back(p.ratio);
      s["map"].push_back(number_or_null(p.map_sum / n));
      s["normalized_map"].push_back(number_or_null(p.norm_sum / n));
    }
    j["series"].push_back(std::move(s));
  }
  return j.dump(2) + "\n";
}

void write_sweep_outputs(const SweepOutput& output, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  write_text(base / "sweep.csv", results_to_csv(output.results));
  write_text(base / "folds.csv", fold_results_to_csv(output.fold_results));
  write_text(base / "plot_data.json", plot_data_json(output));
  save_rewards((base / "rewards.ndjson").string(), output.rewards);
}

std::vector<ErrorRow> error_rows(const std::string& name, const Dataset& dataset, const std::vector<bool>& offload,
                                 const ErrorThresholds& thresholds, const EvalConfig& eval) {
  const auto images = eval_images(dataset, offload);
  const ErrorBreakdown b = error_breakdown(images, thresholds, eval);
  std::vector<ErrorRow> rows;
  for (std::size_t c = 0; c < kErrorCategories.size(); ++c) rows.push_back({name, kErrorCategories[c], b[c]});
  return rows;
}

std::vector<ErrorRow> error_report(const Dataset& dataset, const ExperimentConfig& config) {
  validate(dataset);
  const auto rewards = compute_rewards(dataset, capped_context(config.context, dataset.size()), reward_options(config));
  std::vector<double> oric_scores, ori_scores;
  for (const auto& r : rewards) {
    oric_scores.push_back(r.oric);
    ori_scores.push_back(r.ori);
  }
  std::vector<std::size_t> everything(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) everything[i] = i;
  const std::string at = "@" + format_number(config.error_ratio);

  std::vector<std::pair<std::string, std::vector<bool>>> configs;
  configs.emplace_back("weak", std::vector<bool>(dataset.size(), false));
  configs.emplace_back("strong", std::vector<bool>(dataset.size(), true));
  configs.emplace_back("oracle-oric" + at,
                       plan_mask(dataset, threshold_plan(scored(dataset, oric_scores, everything), config.error_ratio)));
  configs.emplace_back("oracle-ori" + at,
                       plan_mask(dataset, threshold_plan(scored(dataset, ori_scores, everything), config.error_ratio)));

  std::vector<std::vector<ErrorRow>> parts(configs.size());
  parallel_for(configs.size(), worker_count(config.threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      parts[k] = error_rows(configs[k].first, dataset, configs[k].second, config.error_thresholds, config.eval);
    }
  });
  std::vector<ErrorRow> rows;
  for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

std::string error_rows_to_csv(std::span<const ErrorRow> rows) {
  std::ostringstream out;
  out << "detector_config,category,map_reduction\n";
  for (const auto& r : rows) {
    out << r.detector_config << ',' << to_string(r.category) << ',' << format_number(r.map_reduction) << '\n';
  }
  return out.str();
}

GridSearchResult run_grid_search(const Dataset& dataset, const ExperimentConfig& config) {
  validate(dataset);
  const SystemEvaluator sys(dataset, config.eval);
  const RewardOptions options = reward_options(config);
  const auto rewards = compute_rewards(dataset, capped_context(config.context, dataset.size()), options);
  std::vector<std::size_t> everything(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) everything[i] = i;

  GridSearchResult result;
  for (const auto& tc : expand_grid(config.train, config.grid)) {
    const auto cv = cross_validate(dataset, config.context, tc, config.folds, options);
    GridEntry entry;
    entry.config = tc;
    const auto target = training_targets(rewards, tc.target);
    entry.spearman = spearman(cv.estimates, target);
    const auto s = scored(dataset, cv.estimates, everything);
    double sum = 0.0;
    std::size_t count = 0;
    for (double ratio : config.ratios) {
      if (ratio <= 0.0 || ratio >= 1.0) continue;
      const double norm = sys.normalized(sys.system_map(plan_mask(dataset, threshold_plan(s, ratio))));
      if (std::isfinite(norm)) {
        sum += norm;
        ++count;
      }
    }
    entry.mean_normalized_map = count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
    result.entries.push_back(std::move(entry));
  }
  for (std::size_t k = 1; k < result.entries.size(); ++k) {
    const double best = result.entries[result.best].mean_normalized_map;
    const double v = result.entries[k].mean_normalized_map;
    if (v > best || (std::isnan(best) && !std::isnan(v))) result.best = k;
  }
  return result;
}

std::string grid_to_csv(const GridSearchResult& result) {
  std::ostringstream out;
  out << "index,config_hash,hidden,learning_rate,momentum,epochs,batch_size,weighted,target,spearman,"
         "mean_normalized_map,best\n";
  for (std::size_t k = 0; k < result.entries.size(); ++k) {
    const auto& e = result.entries[k];
    std::string hidden;
    for (std::size_t h = 0; h < e.config.hidden.size(); ++h) {
      if (h) hidden += ' ';
      hidden += std::to_string(e.config.hidden[h]);
    }
    out << k << ',' << config_hash(e.config) << ',' << hidden << ',' << format_number(e.config.learning_rate) << ','
        << format_number(e.config.momentum) << ',' << e.config.epochs << ',' << e.config.batch_size << ','
        << (e.config.weighted ? "true" : "false") << ',' << to_string(e.config.target) << ','
        << format_number(e.spearman) << ',' << format_number(e.mean_normalized_map) << ','
        << (k == result.best ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace oric
