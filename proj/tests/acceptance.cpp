// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "oric/config.hpp"
#include "oric/error.hpp"
#include "oric/estimator.hpp"
#include "oric/evaluator.hpp"
#include "oric/experiment.hpp"
#include "oric/features.hpp"
#include "oric/mlp.hpp"
#include "oric/policy.hpp"
#include "oric/reward.hpp"
#include "oric/rng.hpp"
#include "oric/synth.hpp"
#include "support.hpp"

#ifndef ORIC_CLI_PATH
#error "ORIC_CLI_PATH must name the command-line binary"
#endif

using namespace oric;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << x;
  return ss.str();
}

// ---- 1 --------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  std::size_t mismatched_presence = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(4);
    const auto images = test::random_images(rng, 1 + rng.below(5), m, 6);
    for (auto which : {DetectorKind::kWeak, DetectorKind::kStrong}) {
      for (auto interp : {Interpolation::kAllPoint, Interpolation::kElevenPoint}) {
        const auto fast = try_mean_ap(evaluate_images(images, which), interp);
        test::ReferenceOptions opt;
        opt.eleven_point = interp == Interpolation::kElevenPoint;
        const auto slow = test::reference_map(images, which, m, opt);
        if (fast.has_value() != slow.has_value()) {
          ++mismatched_presence;
        } else if (fast) {
          worst = std::max(worst, std::abs(*fast - *slow));
        }
      }
    }
  }
  const double t = seconds_since(start);
  return {worst <= 1e-9 && mismatched_presence == 0 && t < 10.0,
          "200 datasets, max |diff| " + fmt(worst) + ", undefined mismatches " + std::to_string(mismatched_presence) +
              ", " + fmt(t, 3) + " s"};
}

// ---- 2 --------------------------------------------------------------------

Outcome incremental_equivalence() {
  const auto start = Clock::now();
  Rng rng(3030);
  double worst = 0.0;
  std::size_t mismatched_presence = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(6);
    const auto context = test::random_images(rng, rng.below(51), m, 6);
    auto image = test::random_image(rng, 10'000, m, 6);
    if (!context.empty() && rng.bernoulli(0.2)) image = context[rng.below(context.size())];
    const ContextState state(context);
    for (auto which : {DetectorKind::kWeak, DetectorKind::kStrong}) {
      const auto fast = state.mapc(image, which);
      // Full recomputation: the pooled set with the image's chosen detector.
      auto pooled = context;
      pooled.push_back(image);
      pooled.back().weak = image.detections(which);
      const auto slow = test::reference_map(pooled, DetectorKind::kWeak, m);
      if (fast.has_value() != slow.has_value()) {
        ++mismatched_presence;
      } else if (fast) {
        worst = std::max(worst, std::abs(*fast - *slow));
      }
    }
  }
  const double t = seconds_since(start);
  return {worst <= 1e-12 && mismatched_presence == 0 && t < 30.0,
          "200 pairs, max |diff| " + fmt(worst) + ", undefined mismatches " + std::to_string(mismatched_presence) +
              ", " + fmt(t, 3) + " s"};
}

// ---- 3 --------------------------------------------------------------------

Outcome identity_reductions() {
  SynthSpec spec;
  spec.num_images = 300;
  spec.seed = 11;
  const Dataset ds = generate(spec);

  std::size_t ori_mismatch = 0;
  const ContextState empty;
  for (const auto& img : ds.images) {
    if (oric::oric(img, empty) != ori(img)) ++ori_mismatch;
  }
  const auto empty_rewards = compute_rewards(ds, {0, 1});
  for (const auto& r : empty_rewards) {
    if (r.oric != r.ori) ++ori_mismatch;
  }

  Dataset same = ds;
  for (auto& img : same.images) img.strong = img.weak;
  std::size_t nonzero = 0;
  for (const auto& r : compute_rewards(same, {200, 2})) {
    if (r.ori != 0.0 || r.oric != 0.0 || r.oric_unscaled != 0.0) ++nonzero;
  }
  ExperimentConfig cfg;
  cfg.context = {200, 2};
  cfg.policies = {"oracle-oric", "oracle-ori", "random", "dcsb"};
  cfg.seeds = {0, 1, 2};
  const auto sweep = run_sweep(same, cfg);
  std::size_t varying = 0;
  for (const auto& r : sweep.results) {
    if (r.map != sweep.weak_map) ++varying;
  }
  for (const auto& r : sweep.fold_results) {
    const auto& first = sweep.fold_results.front();
    if (r.fold == first.fold && r.result.map != first.result.map) ++varying;
  }
  return {ori_mismatch == 0 && nonzero == 0 && varying == 0 && sweep.weak_map == sweep.strong_map,
          "ORIC(|E|=0) != ORI on " + std::to_string(ori_mismatch) + " images; nonzero rewards with identical outputs " +
              std::to_string(nonzero) + "; sweep rows off the constant mAP " + std::to_string(varying) + " of " +
              std::to_string(sweep.results.size())};
}

// ---- 4 --------------------------------------------------------------------

// Every budget-sized subset of {0..n-1}, as masks.
void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<bool>&)>& fn) {
  std::vector<bool> mask(n, false);
  std::fill(mask.end() - static_cast<std::ptrdiff_t>(k), mask.end(), true);
  do fn(mask);
  while (std::next_permutation(mask.begin(), mask.end()));
}

Outcome oracle_consistency() {
  const auto start = Clock::now();
  std::size_t violations = 0;
  double worst_gap = 0.0, gap_sum = 0.0;
  std::size_t optimal = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    SynthSpec spec;
    spec.num_images = 10;
    spec.num_classes = 5;
    spec.seed = 500 + s;
    const Dataset ds = generate(spec);
    const SystemEvaluator sys(ds);
    const auto best = oracle_best_subset(ds, 3);
    const double best_map = sys.system_map(best);
    for_each_subset(ds.size(), 3, [&](const std::vector<bool>& mask) {
      if (sys.system_map(mask) > best_map) ++violations;
    });
    const auto rewards = compute_rewards(ds, {ds.size(), s});
    std::vector<ScoredImage> scores;
    for (const auto& r : rewards) scores.push_back({r.image_id, r.oric});
    const auto greedy = threshold_plan(scores, 0.3);
    if (greedy.offloaded.size() != 3) ++violations;
    const double greedy_map = sys.system_map(greedy);
    if (greedy_map > best_map) ++violations;
    const double gap = best_map - greedy_map;
    worst_gap = std::max(worst_gap, gap);
    gap_sum += gap;
    if (gap == 0.0) ++optimal;
  }
  const double t = seconds_since(start);
  return {violations == 0 && t < 120.0,
          "50 datasets, violations " + std::to_string(violations) + ", greedy optimal in " + std::to_string(optimal) +
              ", mean gap " + fmt(gap_sum / 50.0) + ", max gap " + fmt(worst_gap) + ", " + fmt(t, 3) + " s"};
}

// ---- 5 and 6 ---------------------------------------------------------------

struct DefaultSweeps {
  // policy -> ratio -> maps over dataset seeds (random: over all its seeds)
  std::map<std::string, std::map<double, std::vector<double>>> maps;
  std::vector<double> subset_weak, subset_strong, subset_fraction;
  double seconds = 0.0;
};

const DefaultSweeps& default_sweeps() {
  static const DefaultSweeps out = [] {
    DefaultSweeps d;
    const auto start = Clock::now();
    for (std::uint64_t s = 0; s < 10; ++s) {
      SynthSpec spec;
      spec.seed = s;
      const Dataset ds = generate(spec);
      ExperimentConfig cfg;
      cfg.context = {kDefaultContextSize, s};
      cfg.policies = {"oracle-oric", "oracle-ori", "random"};
      cfg.ratios = {0.1, 0.2, 0.5};
      cfg.seeds = {0, 1, 2, 3, 4};
      const auto sweep = run_sweep(ds, cfg);
      for (const auto& r : sweep.results) d.maps[r.policy][r.ratio].push_back(r.map);

      const SystemEvaluator sys(ds);
      std::vector<std::size_t> subset;
      for (std::size_t i = 0; i < sweep.rewards.size(); ++i) {
        if (sweep.rewards[i].oric <= 0.0) subset.push_back(i);
      }
      d.subset_weak.push_back(sys.system_map(std::vector<bool>(ds.size(), false), subset));
      d.subset_strong.push_back(sys.system_map(std::vector<bool>(ds.size(), true), subset));
      d.subset_fraction.push_back(static_cast<double>(subset.size()) / static_cast<double>(ds.size()));
    }
    d.seconds = seconds_since(start);
    return d;
  }();
  return out;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Outcome sweep_ordering() {
  const auto& d = default_sweeps();
  bool ok = true;
  std::string detail;
  for (double r : {0.1, 0.2, 0.5}) {
    const double a = mean(d.maps.at("oracle-oric").at(r));
    const double b = mean(d.maps.at("oracle-ori").at(r));
    const double c = mean(d.maps.at("random").at(r));
    ok = ok && a >= b && a >= c && b >= c;
    detail += "r=" + fmt(r, 2) + " oric " + fmt(a) + " ori " + fmt(b) + " random " + fmt(c) + "; ";
  }
  return {ok, detail + "10 seeds, " + fmt(d.seconds, 3) + " s"};
}

Outcome nonpositive_subset() {
  const auto& d = default_sweeps();
  const double weak = mean(d.subset_weak);
  const double strong = mean(d.subset_strong);
  return {weak >= strong, "weak " + fmt(weak) + " strong " + fmt(strong) +
                              ", subset fraction " + fmt(mean(d.subset_fraction))};
}

// ---- 7 --------------------------------------------------------------------

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng(7);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const std::size_t dim = 4 + rng.below(8);
    const std::vector<std::size_t> hidden{3 + rng.below(6), 2 + rng.below(5)};
    MlpModel model = init_mlp(dim, hidden, rng.next());
    auto params = flatten_parameters(model);
    for (double& p : params) p += rng.uniform(-0.1, 0.1);
    assign_parameters(model, params);
    std::vector<std::vector<double>> inputs(8, std::vector<double>(dim));
    for (auto& x : inputs)
      for (double& v : x) v = rng.uniform(-1, 1);
    std::vector<double> targets(inputs.size());
    for (double& t : targets) t = rng.bernoulli(0.3) ? 0.0 : rng.uniform();
    const bool weighted = draw % 4 != 3;

    const auto analytic = loss_and_gradient(model, inputs, targets, weighted).gradient;
    std::vector<double> diff(params.size()), numeric(params.size());
    const double h = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params;
      p[k] += h;
      assign_parameters(model, p);
      const double up = loss_and_gradient(model, inputs, targets, weighted).loss;
      p[k] -= 2 * h;
      assign_parameters(model, p);
      const double down = loss_and_gradient(model, inputs, targets, weighted).loss;
      numeric[k] = (up - down) / (2 * h);
      diff[k] = analytic[k] - numeric[k];
    }
    assign_parameters(model, params);
    worst = std::max(worst, norm(diff) / std::max({norm(analytic), norm(numeric), 1e-12}));
  }
  const double t = seconds_since(start);
  return {worst <= 1e-4 && t < 5.0, "20 draws, max relative error " + fmt(worst) + ", " + fmt(t, 3) + " s"};
}

// ---- 8 --------------------------------------------------------------------

Outcome estimator_efficacy() {
  const auto start = Clock::now();
  const Dataset ds = generate(SynthSpec{});
  ExperimentConfig cfg;
  cfg.policies = {"estimator", "random"};
  cfg.ratios = {0.2};
  cfg.folds = 5;
  const auto sweep = run_sweep(ds, cfg);
  std::vector<double> est(cfg.folds, std::nan("")), rnd_sum(cfg.folds, 0.0);
  std::vector<std::size_t> rnd_n(cfg.folds, 0);
  for (const auto& f : sweep.fold_results) {
    if (f.result.policy == "estimator") est[f.fold] = f.result.normalized_map;
    if (f.result.policy == "random") {
      rnd_sum[f.fold] += f.result.normalized_map;
      ++rnd_n[f.fold];
    }
  }
  std::size_t wins = 0;
  std::string detail;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    const double rnd = rnd_sum[f] / static_cast<double>(rnd_n[f]);
    if (est[f] > rnd) ++wins;
    detail += "fold " + std::to_string(f) + " " + fmt(est[f], 3) + " vs " + fmt(rnd, 3) + "; ";
  }
  return {wins >= 4, std::to_string(wins) + "/5 folds beat random at r=0.2 (" + detail + fmt(seconds_since(start), 3) +
                         " s)"};
}

// ---- 9 --------------------------------------------------------------------

Outcome moric_distribution() {
  Rng rng(9);
  std::size_t bad = 0;
  for (std::size_t n : {1, 2, 7, 100, 1000}) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1, 1);
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) continue;
    rng.shuffle(v);
    auto m = moric(v);
    std::sort(m.begin(), m.end());
    for (std::size_t k = 0; k < n; ++k) {
      if (m[k] != static_cast<double>(k + 1) / static_cast<double>(n)) ++bad;
    }
  }
  const auto tied = moric(std::vector<double>{0.3, 0.0, 0.7, 0.0, 0.0});
  const std::vector<double> expected{0.8, 0.4, 1.0, 0.4, 0.4};
  const bool ties_ok = tied == expected;
  return {bad == 0 && ties_ok, "distinct-value mismatches " + std::to_string(bad) + "; tie example " +
                                   (ties_ok ? "matches mid-ranks 0.4,0.4,0.4,0.8,1" : "differs")};
}

// ---- 10 -------------------------------------------------------------------

Outcome performance_envelope() {
  SynthSpec spec;
  spec.num_images = 5000;
  spec.seed = 10;
  const Dataset ds = generate(spec);
  const ContextSpec ctx{1000, 3};

  const auto start = Clock::now();
  const auto rewards = compute_rewards(ds, ctx);
  const double incremental = seconds_since(start);

  // Naive path: match and pool the whole context again for every image and
  // detector, on a subsample, extrapolated to N.
  const auto context = sample_context(ds.images, ctx);
  const std::size_t sample = 25;
  const auto naive_start = Clock::now();
  double sink = 0.0;
  for (std::size_t i = 0; i < sample; ++i) {
    const auto& img = ds.images[i * (ds.size() / sample)];
    for (auto which : {DetectorKind::kWeak, DetectorKind::kStrong}) {
      std::vector<ClassStates> parts;
      parts.reserve(context.size() + 1);
      for (const auto& c : context) parts.push_back(match_image(c.truths, c.weak));
      parts.push_back(match_image(img.truths, img.detections(which)));
      sink += try_mean_ap(merge_states(parts)).value_or(0.0);
    }
  }
  const double naive = seconds_since(naive_start) * static_cast<double>(ds.size()) / static_cast<double>(sample);
  const double ratio = naive / incremental;
  return {rewards.size() == ds.size() && incremental < 60.0 && ratio > 10.0 && std::isfinite(sink),
          "N=5000 |E|=1000 incremental " + fmt(incremental, 3) + " s, naive (extrapolated) " + fmt(naive, 3) +
              " s, speedup " + fmt(ratio, 3) + "x"};
}

// ---- 11 -------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ORIC_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

// Uses ORIC_GT / ORIC_WEAK / ORIC_STRONG when all three are set; otherwise
// exports a synthetic dataset to COCO-format files first.
Outcome real_data_path() {
  const auto start = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "oric_acceptance_real";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const char* gt = std::getenv("ORIC_GT");
  const char* weak = std::getenv("ORIC_WEAK");
  const char* strong = std::getenv("ORIC_STRONG");
  std::string source = "user files";
  fs::path gt_path, weak_path, strong_path;
  if (gt && weak && strong) {
    gt_path = gt;
    weak_path = weak;
    strong_path = strong;
  } else {
    source = "synthetic COCO export";
    if (run_cli("synth --num-images 400 --seed 21 --out " + (dir / "data").string(), dir / "synth.log") != 0) {
      return {false, "synth export failed, see " + (dir / "synth.log").string()};
    }
    gt_path = dir / "data" / "gt.json";
    weak_path = dir / "data" / "weak.json";
    strong_path = dir / "data" / "strong.json";
  }
  const std::string data =
      "--gt " + gt_path.string() + " --weak " + weak_path.string() + " --strong " + strong_path.string();
  const int reward = run_cli("reward " + data + " --context-size 200 --out " + (dir / "rewards.ndjson").string(),
                             dir / "reward.log");
  const int sweep = run_cli("sweep " + data + " --context-size 200 --policy oracle-oric,oracle-ori,estimator,random "
                            "--out " + (dir / "sweep").string(), dir / "sweep.log");
  const bool csv = first_line(dir / "sweep" / "sweep.csv") == "policy,ratio,seed,map,normalized_map" &&
                   fs::exists(dir / "sweep" / "plot_data.json") && fs::file_size(dir / "rewards.ndjson") > 0;
  return {reward == 0 && sweep == 0 && csv, source + ": reward exit " + std::to_string(reward) + ", sweep exit " +
                                                std::to_string(sweep) + ", CSV at " +
                                                (dir / "sweep" / "sweep.csv").string() + ", " +
                                                fmt(seconds_since(start), 3) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
      {"mAP oracle equivalence", oracle_equivalence},
      {"incremental mAPC equivalence", incremental_equivalence},
      {"identity reductions", identity_reductions},
      {"exhaustive oracle consistency", oracle_consistency},
      {"oracle sweep ordering", sweep_ordering},
      {"non-positive ORIC subset", nonpositive_subset},
      {"gradient check", gradient_check},
      {"estimator efficacy", estimator_efficacy},
      {"MORIC distribution", moric_distribution},
      {"performance envelope", performance_envelope},
      {"real-data path", real_data_path},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
