//
// Copyright 2026 The labelrand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line front end: seeded label randomization, prior construction,
// multi-stage private training, SCO benchmarks, and verification suites.
// Exit codes: 0 success, 1 verification failure, 2 input error,
// 3 runtime/privacy error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "labelrand/core.hpp"
#include "labelrand/io.hpp"
#include "labelrand/mechanisms.hpp"
#include "labelrand/multistage.hpp"
#include "labelrand/optimality.hpp"
#include "labelrand/priors.hpp"
#include "labelrand/rng.hpp"
#include "labelrand/sco.hpp"
#include "labelrand/verify.hpp"

namespace {

using json = nlohmann::json;
using namespace labelrand;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInputError = 2;
constexpr int kExitRuntimeError = 3;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json input_entry(const std::filesystem::path& path) {
  return json{{"path", path.string()}, {"fnv1a64", hex64(io::file_digest(path))}};
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    json parameters, uint64_t seed, json inputs,
                    double wallclock) {
  json manifest{{"command", command},
                {"parameters", std::move(parameters)},
                {"seed", seed},
                {"inputs", std::move(inputs)},
                {"library_version", kVersion},
                {"wallclock_seconds", wallclock}};
  io::write_text_atomic(path, manifest.dump(2) + "\n");
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw InputError(what + ": expected comma-separated reals, got '" + text + "'");
    }
  }
  if (values.empty()) throw InputError(what + ": empty list");
  return values;
}

int print_suite(const verify::SuiteResult& suite) {
  for (const auto& check : suite.checks) {
    std::printf("[%s] %s: %s\n", check.pass ? "PASS" : "FAIL",
                check.name.c_str(), check.detail.c_str());
  }
  std::printf("%s\n", suite.all_pass() ? "all checks passed" : "CHECKS FAILED");
  return suite.all_pass() ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------------------
// randomize

struct RandomizeArgs {
  std::string labels_path;
  std::string priors_path;
  std::string mechanism = "classic";
  double eps = 1.0;
  int top_k = 1;
  int classes = 0;
  uint64_t seed = 0;
  std::string out;
};

int run_randomize(const RandomizeArgs& args) {
  auto start = std::chrono::steady_clock::now();
  const PrivacyBudget budget{args.eps, 0.0};
  validate(budget);

  io::LabelsFile labels = io::read_labels_csv(args.labels_path);

  std::optional<io::PriorsFile> priors;
  std::unordered_map<std::string, size_t> prior_index;
  if (!args.priors_path.empty()) {
    priors = io::read_priors_csv(args.priors_path);
    for (size_t i = 0; i < priors->ids.size(); ++i) {
      prior_index.emplace(priors->ids[i], i);
    }
  }

  int num_classes = args.classes;
  if (priors.has_value()) {
    num_classes = priors->num_classes();
  }
  if (num_classes < 2) {
    throw InputError("randomize: pass --classes or a priors file to fix K");
  }
  const LabelSpace space{num_classes};
  validate(space);

  const bool with_prior_mode = args.mechanism == "with-prior";
  const bool top_k_mode = args.mechanism == "top-k";
  if (!with_prior_mode && !top_k_mode && args.mechanism != "classic") {
    throw InputError("randomize: unknown mechanism '" + args.mechanism + "'");
  }
  if ((with_prior_mode || top_k_mode) && !priors.has_value()) {
    throw InputError("randomize: mechanism '" + args.mechanism +
                     "' requires --priors");
  }

  Rng master(args.seed);
  std::vector<io::RandomizedRow> rows;
  rows.reserve(labels.ids.size());
  std::map<int, size_t> k_star_histogram;

  for (size_t i = 0; i < labels.ids.size(); ++i) {
    const std::string& id = labels.ids[i];
    const int y = labels.labels[i];
    if (y < 0 || y >= num_classes) {
      throw InputError(args.labels_path + ":" + std::to_string(labels.lines[i]) +
                       ": label " + std::to_string(y) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
    Rng row_rng = master.fork(fnv1a64(id));

    io::RandomizedRow out_row;
    out_row.id = id;
    if (args.mechanism == "classic") {
      out_row.label = rr_classic(y, space, budget, row_rng);
    } else {
      auto it = prior_index.find(id);
      if (it == prior_index.end()) {
        throw InputError(args.labels_path + ":" +
                         std::to_string(labels.lines[i]) + ": id '" + id +
                         "' has no row in " + args.priors_path);
      }
      Prior prior(priors->rows[it->second]);
      if (top_k_mode) {
        out_row.label = rr_top_k(y, prior, args.top_k, budget, row_rng);
      } else {
        RrpPlan plan = rrp_plan(prior, budget);
        out_row.label = rr_with_plan(y, plan, num_classes, budget, row_rng);
        out_row.k_star = plan.k_star;
        ++k_star_histogram[plan.k_star];
      }
    }
    rows.push_back(std::move(out_row));
  }

  io::write_randomized_csv(args.out, rows, with_prior_mode);

  json parameters{{"mechanism", args.mechanism},
                  {"eps", args.eps},
                  {"classes", num_classes},
                  {"out", args.out}};
  if (top_k_mode) parameters["k"] = args.top_k;
  json inputs{{"labels", input_entry(args.labels_path)}};
  if (priors.has_value()) inputs["priors"] = input_entry(args.priors_path);
  if (with_prior_mode) {
    json hist = json::object();
    double k_sum = 0.0;
    for (const auto& [k, count] : k_star_histogram) {
      hist[std::to_string(k)] = count;
      k_sum += static_cast<double>(k) * static_cast<double>(count);
    }
    parameters["k_star_histogram"] = hist;
    parameters["mean_k_star"] = k_sum / static_cast<double>(rows.size());
  }
  write_manifest(args.out + ".manifest.json", "randomize", parameters,
                 args.seed, inputs, elapsed_seconds(start));
  std::printf("randomized %zu labels -> %s\n", rows.size(), args.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// priors

struct PriorsArgs {
  std::string features_path;
  std::string labels_path;
  int clusters = 100;
  double eps_prior = 0.05;
  int classes = 0;
  uint64_t seed = 0;
  std::string out;
};

int run_priors(const PriorsArgs& args) {
  auto start = std::chrono::steady_clock::now();
  FeatureMatrix features = io::read_features_csv(args.features_path);
  io::LabelsFile labels_file = io::read_labels_csv(args.labels_path);

  std::unordered_map<std::string, size_t> label_of;
  for (size_t i = 0; i < labels_file.ids.size(); ++i) {
    label_of.emplace(labels_file.ids[i], i);
  }
  std::vector<int> labels;
  labels.reserve(features.ids.size());
  int max_label = 0;
  for (const auto& id : features.ids) {
    auto it = label_of.find(id);
    if (it == label_of.end()) {
      throw InputError(args.features_path + ": id '" + id + "' has no row in " +
                       args.labels_path);
    }
    labels.push_back(labels_file.labels[it->second]);
    max_label = std::max(max_label, labels.back());
  }
  const int num_classes = args.classes > 0 ? args.classes : max_label + 1;

  ClusterPriorsResult result = cluster_histogram_priors(
      features, labels, LabelSpace{num_classes}, args.clusters,
      PrivacyBudget{args.eps_prior, 0.0}, Rng(args.seed));

  io::write_priors_csv(args.out, features.ids, result.priors);

  json parameters{{"clusters", args.clusters},
                  {"eps_prior_spent", result.spent.epsilon},
                  {"classes", num_classes},
                  {"out", args.out},
                  {"note", "subtract eps_prior_spent from the total budget "
                           "before the randomize step"}};
  json inputs{{"features", input_entry(args.features_path)},
              {"labels", input_entry(args.labels_path)}};
  write_manifest(args.out + ".manifest.json", "priors", parameters, args.seed,
                 inputs, elapsed_seconds(start));
  std::printf("wrote %zu priors (C=%d, eps_p=%g) -> %s\n", result.priors.size(),
              args.clusters, args.eps_prior, args.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// mst

struct MstArgs {
  std::string config_path;
  std::string features_path;
  std::string labels_path;
  std::string test_features_path;
  std::string test_labels_path;
  double eps = 1.0;
  int stages = 2;
  std::string splits;  // comma-separated; default depends on stages
  double temperature = 1.0;
  double mixup_alpha = 0.0;
  int epochs = 20;
  double learning_rate = 0.1;
  double lr_decay = 1.0;
  double l2 = 1e-4;
  int batch_size = 64;
  bool no_warm_start = false;
  bool no_reuse = false;
  uint64_t seed = 0;
  std::string out_dir = ".";
};

// Experiment config files are plain `key = value` lines ('#' comments);
// flags given on the command line take precedence.
void apply_mst_config(const CLI::App& mst, MstArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) {
    throw InputError(args.config_path + ": cannot open config file");
  }
  auto trim = [](std::string s) {
    size_t first = s.find_first_not_of(" \t\r");
    size_t last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string()
                                      : s.substr(first, last - first + 1);
  };

  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    size_t equals = text.find('=');
    if (equals == std::string::npos) {
      throw InputError(args.config_path + ":" + std::to_string(line_number) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(text.substr(0, equals));
    const std::string value = trim(text.substr(equals + 1));
    const std::string flag = "--" + key;

    auto parse_real = [&](double& target) { target = std::stod(value); };
    auto parse_int = [&](int& target) { target = std::stoi(value); };
    auto parse_bool = [&](bool& target) {
      if (value == "true" || value == "1") target = true;
      else if (value == "false" || value == "0") target = false;
      else throw std::invalid_argument("expected true/false");
    };

    try {
      // Command-line flags win over config values.
      auto overridden = [&mst](const std::string& name) {
        return mst.count(name) > 0;
      };
      if (key == "eps") { if (!overridden(flag)) parse_real(args.eps); }
      else if (key == "stages") { if (!overridden(flag)) parse_int(args.stages); }
      else if (key == "splits") { if (!overridden(flag)) args.splits = value; }
      else if (key == "temperature") { if (!overridden(flag)) parse_real(args.temperature); }
      else if (key == "mixup-alpha") { if (!overridden(flag)) parse_real(args.mixup_alpha); }
      else if (key == "epochs") { if (!overridden(flag)) parse_int(args.epochs); }
      else if (key == "learning-rate") { if (!overridden(flag)) parse_real(args.learning_rate); }
      else if (key == "lr-decay") { if (!overridden(flag)) parse_real(args.lr_decay); }
      else if (key == "l2") { if (!overridden(flag)) parse_real(args.l2); }
      else if (key == "batch-size") { if (!overridden(flag)) parse_int(args.batch_size); }
      else if (key == "seed") { if (!overridden("--seed")) args.seed = std::stoull(value); }
      else if (key == "no-warm-start") { if (!overridden(flag)) parse_bool(args.no_warm_start); }
      else if (key == "no-reuse") { if (!overridden(flag)) parse_bool(args.no_reuse); }
      else {
        throw InputError(args.config_path + ":" + std::to_string(line_number) +
                         ": unknown key '" + key + "'");
      }
    } catch (const InputError&) {
      throw;
    } catch (const std::exception&) {
      throw InputError(args.config_path + ":" + std::to_string(line_number) +
                       ": bad value '" + value + "' for key '" + key + "'");
    }
  }
}

double model_accuracy(const ProbabilisticModel& model,
                      const std::vector<std::vector<double>>& xs,
                      const std::vector<int>& ys) {
  if (xs.empty()) return 0.0;
  size_t hits = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (top_k_of_logits(model.predict_logits(xs[i]), 1).front() == ys[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(xs.size());
}

void write_softmax_model_csv(const std::filesystem::path& path,
                             const SoftmaxModel& model) {
  std::ostringstream out;
  out << "class";
  for (int j = 0; j < model.feature_dim(); ++j) out << ",w" << j;
  out << ",bias\n";
  const size_t stride = static_cast<size_t>(model.feature_dim()) + 1;
  for (int k = 0; k < model.num_classes(); ++k) {
    out << k;
    for (size_t j = 0; j < stride; ++j) {
      out << ',' << io::format_double(model.weights()[static_cast<size_t>(k) * stride + j]);
    }
    out << "\n";
  }
  io::write_text_atomic(path, out.str());
}

int run_mst(const MstArgs& args) {
  auto start = std::chrono::steady_clock::now();
  FeatureMatrix features = io::read_features_csv(args.features_path);
  io::LabelsFile labels_file = io::read_labels_csv(args.labels_path);

  std::unordered_map<std::string, size_t> label_of;
  for (size_t i = 0; i < labels_file.ids.size(); ++i) {
    label_of.emplace(labels_file.ids[i], i);
  }
  std::vector<int> labels;
  labels.reserve(features.ids.size());
  int max_label = 0;
  for (const auto& id : features.ids) {
    auto it = label_of.find(id);
    if (it == label_of.end()) {
      throw InputError(args.features_path + ": id '" + id + "' has no row in " +
                       args.labels_path);
    }
    labels.push_back(labels_file.labels[it->second]);
    max_label = std::max(max_label, labels.back());
  }
  const int num_classes = max_label + 1;
  const int feature_dim = static_cast<int>(features.dim());

  LabeledDataset data(features.ids, features.rows, labels, num_classes);

  LpMstOptions options;
  options.plan.num_stages = args.stages;
  options.plan.seed = args.seed;
  if (!args.splits.empty()) {
    options.plan.splits = parse_double_list(args.splits, "--splits");
  } else if (args.stages == 2) {
    options.plan.splits = {0.65, 0.35};
  } else {
    options.plan = StagePlan::even(args.stages, args.seed);
  }
  options.budget = PrivacyBudget{args.eps, 0.0};
  options.train.epochs = args.epochs;
  options.train.learning_rate = args.learning_rate;
  options.train.lr_decay = args.lr_decay;
  options.train.l2 = args.l2;
  options.train.mixup_alpha = args.mixup_alpha;
  options.train.temperature = Temperature{args.temperature};
  options.train.batch_size = args.batch_size;
  options.warm_start = !args.no_warm_start;
  options.reuse_labels = !args.no_reuse;

  LpMstResult result = lp_mst(data, options, make_softmax_learner(num_classes, feature_dim),
                              Rng(args.seed));

  // Optional held-out evaluation; test labels are never randomized.
  std::vector<std::vector<double>> test_xs;
  std::vector<int> test_ys;
  if (!args.test_features_path.empty()) {
    if (args.test_labels_path.empty()) {
      throw InputError("mst: --test-features requires --test-labels");
    }
    FeatureMatrix test_features = io::read_features_csv(args.test_features_path);
    io::LabelsFile test_labels = io::read_labels_csv(args.test_labels_path);
    std::unordered_map<std::string, size_t> test_label_of;
    for (size_t i = 0; i < test_labels.ids.size(); ++i) {
      test_label_of.emplace(test_labels.ids[i], i);
    }
    for (size_t i = 0; i < test_features.ids.size(); ++i) {
      auto it = test_label_of.find(test_features.ids[i]);
      if (it == test_label_of.end()) {
        throw InputError(args.test_features_path + ": id '" +
                         test_features.ids[i] + "' has no row in " +
                         args.test_labels_path);
      }
      test_xs.push_back(test_features.rows[i]);
      test_ys.push_back(test_labels.labels[it->second]);
    }
  }

  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out_dir(args.out_dir);

  // Randomized labels, one row per example in stage order.
  {
    std::ostringstream out;
    out << "id,stage,k_star,label\n";
    for (const auto& r : result.randomized) {
      out << r.id << ',' << r.stage << ',' << r.k_star << ',' << r.y_tilde << "\n";
    }
    io::write_text_atomic(out_dir / "randomized.csv", out.str());
  }

  // JSONL report: one line per stage.
  {
    std::ostringstream out;
    for (size_t t = 0; t < result.stages.size(); ++t) {
      const StageReport& s = result.stages[t];
      const ProbabilisticModel& model = *result.stage_models[t];
      json line{{"stage", s.stage},
                {"examples", s.fresh_examples},
                {"reused_examples", s.reused_examples},
                {"mean_k_star", s.mean_k_star},
                {"match_rate", s.match_rate},
                {"epsilon_spent", result.spent.epsilon}};
      std::vector<std::vector<double>> train_xs;
      std::vector<int> train_ys;
      for (size_t i = 0; i < data.size(); ++i) {
        train_xs.push_back(data.features(i));
        train_ys.push_back(data.label_for_diagnostics(i));
      }
      line["train_accuracy"] = model_accuracy(model, train_xs, train_ys);
      if (!test_xs.empty()) {
        line["test_accuracy"] = model_accuracy(model, test_xs, test_ys);
      }
      out << line.dump() << "\n";
    }
    io::write_text_atomic(out_dir / "report.jsonl", out.str());
  }

  const auto* final_model = dynamic_cast<const SoftmaxModel*>(result.final_model.get());
  if (final_model != nullptr) {
    write_softmax_model_csv(out_dir / "model.csv", *final_model);
  }

  json parameters{{"eps", args.eps},
                  {"stages", args.stages},
                  {"splits", options.plan.splits},
                  {"temperature", args.temperature},
                  {"mixup_alpha", args.mixup_alpha},
                  {"epochs", args.epochs},
                  {"learning_rate", args.learning_rate},
                  {"lr_decay", args.lr_decay},
                  {"l2", args.l2},
                  {"batch_size", args.batch_size},
                  {"warm_start", options.warm_start},
                  {"reuse_labels", options.reuse_labels},
                  {"out", args.out_dir}};
  json inputs{{"features", input_entry(args.features_path)},
              {"labels", input_entry(args.labels_path)}};
  if (!args.test_features_path.empty()) {
    inputs["test_features"] = input_entry(args.test_features_path);
    inputs["test_labels"] = input_entry(args.test_labels_path);
  }
  write_manifest(out_dir / "manifest.json", "mst", parameters, args.seed,
                 inputs, elapsed_seconds(start));

  std::printf("lp-mst finished: %d stage(s), eps=%g; report in %s\n",
              args.stages, args.eps,
              (out_dir / "report.jsonl").string().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sco

struct ScoArgs {
  std::string problem = "lower-bound";
  std::string algorithm = "rr-sgd";
  int n = 1000;
  double eps = 1.0;
  double delta = 1e-5;
  double diameter = 1.0;
  double lipschitz = 1.0;
  int classes = 10;
  int dim = 20;
  double separation = 8.0;
  int seeds = 1;
  uint64_t seed = 0;
  std::string out;
};

int run_sco(const ScoArgs& args) {
  auto start = std::chrono::steady_clock::now();
  if (args.problem != "lower-bound" && args.problem != "softmax-blob") {
    throw InputError("sco: unknown problem '" + args.problem + "'");
  }
  if (args.algorithm != "rr-sgd" && args.algorithm != "normal-sgd") {
    throw InputError("sco: unknown algorithm '" + args.algorithm + "'");
  }
  if (args.seeds < 1) throw InputError("sco: --seeds must be >= 1");

  std::ostringstream csv;
  csv << "seed,n,eps,excess_risk,wallclock_seconds,status\n";
  int diverged = 0;

  // Reference minimizer and held-out risk for the blob problem, shared
  // across seeds. The excess is relative to a clean-label plain-SGD
  // reference, so it is an estimate rather than an exact optimum.
  std::optional<ScoProblem> blob_problem;
  std::vector<double> reference_w;
  double reference_risk = 0.0;
  std::vector<std::pair<std::vector<double>, int>> held_out;
  if (args.problem == "softmax-blob") {
    blob_problem = make_softmax_blob_problem(args.classes, args.dim,
                                             args.separation, args.seed);
    Rng ref_rng = Rng(args.seed).fork("sco-reference");
    NormalSgdOptions clean;
    clean.num_samples = std::max(args.n * 5, 20000);
    clean.sigma_override = 0.0;
    clean.schedule = StepSchedule::for_normal_sgd(
        blob_problem->diameter, blob_problem->lipschitz, args.classes, 0.0);
    reference_w = label_normal_sgd(*blob_problem, clean, ref_rng).w;

    Rng held_rng = Rng(args.seed).fork("sco-held-out");
    for (int i = 0; i < 20000; ++i) held_out.push_back(blob_problem->sample(held_rng));
    auto risk_of = [&](const std::vector<double>& w) {
      double total = 0.0;
      for (const auto& [x, y] : held_out) total += blob_problem->loss(w, x, y);
      return total / static_cast<double>(held_out.size());
    };
    reference_risk = risk_of(reference_w);
  }

  double mean_noise_sq = 0.0;
  double noise_bound = 0.0;
  for (int s = 0; s < args.seeds; ++s) {
    auto seed_start = std::chrono::steady_clock::now();
    const uint64_t run_seed = args.seed + static_cast<uint64_t>(s);
    Rng rng(run_seed);
    double excess = 0.0;
    bool ok = true;
    try {
      if (args.problem == "lower-bound") {
        Rng problem_rng = rng.fork("problem");
        // n counts algorithm samples; the dataset needs at least one point
        // (n=0 reports the initial point's risk).
        LowerBoundProblem lb = make_lower_bound_problem(
            std::max(args.n, 1), args.diameter, args.lipschitz, problem_rng);
        Rng algo_rng = rng.fork("algorithm");
        std::vector<double> w;
        if (args.algorithm == "rr-sgd") {
          RrSgdOptions opt;
          opt.num_samples = args.n;
          opt.budget = PrivacyBudget{args.eps, 0.0};
          opt.schedule = StepSchedule::for_rr_sgd(args.diameter, 2,
                                                  args.lipschitz, args.eps);
          w = label_rr_sgd(lb.problem, opt, algo_rng);
        } else {
          NormalSgdOptions opt;
          opt.num_samples = args.n;
          opt.budget = PrivacyBudget{args.eps, args.delta};
          double sigma = gaussian_noise_sigma(args.lipschitz, args.eps, args.delta);
          opt.schedule = StepSchedule::for_normal_sgd(args.diameter,
                                                      args.lipschitz, 2, sigma);
          NormalSgdResult res = label_normal_sgd(lb.problem, opt, algo_rng);
          w = res.w;
          mean_noise_sq += res.mean_noise_norm_sq;
          noise_bound = 2 * res.sigma * res.sigma;
        }
        excess = lb.excess_risk(w);
      } else {
        Rng algo_rng = rng.fork("algorithm");
        std::vector<double> w;
        if (args.algorithm == "rr-sgd") {
          RrSgdOptions opt;
          opt.num_samples = args.n;
          opt.budget = PrivacyBudget{args.eps, 0.0};
          opt.schedule = StepSchedule::for_rr_sgd(
              blob_problem->diameter, args.classes, blob_problem->lipschitz,
              args.eps);
          w = label_rr_sgd(*blob_problem, opt, algo_rng);
        } else {
          NormalSgdOptions opt;
          opt.num_samples = args.n;
          opt.budget = PrivacyBudget{args.eps, args.delta};
          double sigma = gaussian_noise_sigma(blob_problem->lipschitz, args.eps,
                                              args.delta);
          opt.schedule = StepSchedule::for_normal_sgd(
              blob_problem->diameter, blob_problem->lipschitz, args.classes,
              sigma);
          NormalSgdResult res = label_normal_sgd(*blob_problem, opt, algo_rng);
          w = res.w;
          mean_noise_sq += res.mean_noise_norm_sq;
          noise_bound = args.classes * res.sigma * res.sigma;
        }
        double total = 0.0;
        for (const auto& [x, y] : held_out) total += blob_problem->loss(w, x, y);
        excess = total / static_cast<double>(held_out.size()) - reference_risk;
      }
    } catch (const DivergenceError&) {
      ok = false;
      ++diverged;
    }
    csv << run_seed << ',' << args.n << ',' << io::format_double(args.eps) << ',';
    if (ok) csv << io::format_double(excess);
    csv << ',' << io::format_double(elapsed_seconds(seed_start)) << ','
        << (ok ? "ok" : "diverged") << "\n";
  }

  if (!args.out.empty()) {
    io::write_text_atomic(args.out, csv.str());
    json parameters{{"problem", args.problem}, {"algorithm", args.algorithm},
                    {"n", args.n},             {"eps", args.eps},
                    {"delta", args.delta},     {"seeds", args.seeds},
                    {"out", args.out}};
    write_manifest(args.out + ".manifest.json", "sco", parameters, args.seed,
                   json::object(), elapsed_seconds(start));
  } else {
    std::fputs(csv.str().c_str(), stdout);
  }
  if (args.algorithm == "normal-sgd") {
    mean_noise_sq /= args.seeds;
    std::printf("normal-sgd noise: mean ||b_t||^2 = %g, bound K*sigma^2 = %g (%s)\n",
                mean_noise_sq, noise_bound,
                mean_noise_sq <= noise_bound ? "within bound" : "EXCEEDED");
  }
  if (diverged == args.seeds) {
    std::fprintf(stderr, "labelrand: all %d seed(s) diverged\n", args.seeds);
    return kExitRuntimeError;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string suite;
  std::string mechanism;
  std::string prior_text;
  double eps = 1.0;
  double claim_eps = -1.0;
  int classes = 6;
  int top_k = 1;
  int trials = 200;
  int64_t draws = 1000000;
  std::string scales_text = "0.5,1.0";
  uint64_t seed = 0;
};

int run_verify(const VerifyArgs& args) {
  const std::vector<double> eps_grid{0.1, 0.5, 1.0, 2.0, 4.0};

  if (args.suite == "dp") {
    if (!args.mechanism.empty()) {
      // Single-mechanism check at a declared budget.
      Prior prior = args.prior_text.empty()
                        ? Prior::uniform(args.classes)
                        : Prior(parse_double_list(args.prior_text, "--prior"));
      MechanismSpec spec = MechanismSpec::classic();
      if (args.mechanism == "top-k") spec = MechanismSpec::top_k(args.top_k);
      else if (args.mechanism == "with-prior") spec = MechanismSpec::with_prior();
      else if (args.mechanism != "classic") {
        throw InputError("verify dp: unknown mechanism '" + args.mechanism + "'");
      }
      const PrivacyBudget actual{args.eps, 0.0};
      const double claim = args.claim_eps > 0 ? args.claim_eps : args.eps;
      DpCheck check = verify_dp(mechanism_pmf(spec, prior, actual),
                                PrivacyBudget{claim, 0.0});
      std::printf("[%s] dp mechanism=%s eps=%g claim-eps=%g: worst ratio %.9g vs bound %.9g\n",
                  check.ok ? "PASS" : "FAIL", args.mechanism.c_str(), args.eps,
                  claim, check.worst_ratio, std::exp(claim));
      return check.ok ? kExitOk : kExitVerifyFailed;
    }
    std::vector<int> class_grid;
    for (int k = 2; k <= args.classes; ++k) class_grid.push_back(k);
    return print_suite(verify::dp_suite(eps_grid, class_grid, args.trials, args.seed));
  }
  if (args.suite == "optimality") {
    std::vector<int> class_grid;
    for (int k = 2; k <= args.classes; ++k) class_grid.push_back(k);
    return print_suite(
        verify::optimality_suite(class_grid, eps_grid, args.trials, args.seed));
  }
  if (args.suite == "unbiased") {
    return print_suite(verify::unbiased_suite(args.trials, args.seed));
  }
  if (args.suite == "dlaplace") {
    std::vector<double> scales = parse_double_list(args.scales_text, "--scales");
    return print_suite(verify::dlaplace_suite(scales, args.draws, 0.005, args.seed));
  }
  throw InputError("verify: unknown suite '" + args.suite +
                   "' (expected dp, optimality, unbiased, or dlaplace)");
}

// ---------------------------------------------------------------------------
// synth-blobs

struct SynthArgs {
  int n = 1000;
  int test_n = 0;
  int classes = 10;
  int dim = 20;
  double separation = 8.0;
  uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_synth(const SynthArgs& args) {
  Rng rng(args.seed);
  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out_dir(args.out_dir);

  auto write_split = [&](const std::string& prefix, int count, Rng& split_rng) {
    BlobDataset data =
        make_blob_problem(count, args.classes, args.dim, args.separation, split_rng);
    std::ostringstream features;
    std::ostringstream labels;
    features << "id";
    for (int j = 0; j < args.dim; ++j) features << ",f" << j;
    features << "\n";
    labels << "id,label\n";
    for (int i = 0; i < count; ++i) {
      const std::string id = prefix + std::to_string(i);
      features << id;
      for (double v : data.xs[static_cast<size_t>(i)]) {
        features << ',' << io::format_double(v);
      }
      features << "\n";
      labels << id << ',' << data.ys[static_cast<size_t>(i)] << "\n";
    }
    io::write_text_atomic(out_dir / (prefix + "features.csv"), features.str());
    io::write_text_atomic(out_dir / (prefix + "labels.csv"), labels.str());
  };

  Rng train_rng = rng.fork("train");
  write_split("", args.n, train_rng);
  if (args.test_n > 0) {
    Rng test_rng = rng.fork("test");
    write_split("test_", args.test_n, test_rng);
  }
  std::printf("wrote blob dataset (n=%d, K=%d, d=%d) under %s\n", args.n,
              args.classes, args.dim, args.out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-private randomization, training, and verification"};
  app.require_subcommand(1);

  RandomizeArgs randomize_args;
  auto* randomize = app.add_subcommand(
      "randomize", "randomize a label file through a mechanism");
  randomize->add_option("--labels", randomize_args.labels_path, "labels CSV (id,label)")
      ->required();
  randomize->add_option("--priors", randomize_args.priors_path,
                        "priors CSV (id,p0..pK-1)");
  randomize->add_option("--mechanism", randomize_args.mechanism,
                        "classic | top-k | with-prior");
  randomize->add_option("--eps", randomize_args.eps, "privacy budget (nats)")->required();
  randomize->add_option("--k", randomize_args.top_k, "k for the top-k mechanism");
  randomize->add_option("--classes", randomize_args.classes,
                        "label count (required for classic without priors)");
  randomize->add_option("--seed", randomize_args.seed, "master seed")
      ->envname("LABELRAND_SEED");
  randomize->add_option("--out", randomize_args.out, "output CSV path")->required();

  PriorsArgs priors_args;
  auto* priors = app.add_subcommand(
      "priors", "cluster features and emit private histogram priors");
  priors->add_option("--features", priors_args.features_path, "features CSV")->required();
  priors->add_option("--labels", priors_args.labels_path, "labels CSV")->required();
  priors->add_option("--clusters", priors_args.clusters, "cluster count");
  priors->add_option("--eps-prior", priors_args.eps_prior,
                     "budget spent on the histogram queries");
  priors->add_option("--classes", priors_args.classes,
                     "label count (default: max label + 1)");
  priors->add_option("--seed", priors_args.seed, "master seed")
      ->envname("LABELRAND_SEED");
  priors->add_option("--out", priors_args.out, "output priors CSV")->required();

  MstArgs mst_args;
  auto* mst = app.add_subcommand("mst", "multi-stage label-private training");
  mst->add_option("--config", mst_args.config_path,
                  "key = value config file; flags override");
  mst->add_option("--features", mst_args.features_path, "features CSV")->required();
  mst->add_option("--labels", mst_args.labels_path, "labels CSV")->required();
  mst->add_option("--test-features", mst_args.test_features_path,
                  "held-out features CSV (never randomized)");
  mst->add_option("--test-labels", mst_args.test_labels_path, "held-out labels CSV");
  mst->add_option("--eps", mst_args.eps, "per-label privacy budget");
  mst->add_option("--stages", mst_args.stages, "stage count T");
  mst->add_option("--splits", mst_args.splits,
                  "comma-separated stage fractions (default 0.65,0.35 for T=2, "
                  "else equal)");
  mst->add_option("--temperature", mst_args.temperature, "prior temperature");
  mst->add_option("--mixup-alpha", mst_args.mixup_alpha, "mixup strength (0 = off)");
  mst->add_option("--epochs", mst_args.epochs, "epochs per stage");
  mst->add_option("--learning-rate", mst_args.learning_rate, "SGD learning rate");
  mst->add_option("--lr-decay", mst_args.lr_decay, "per-epoch learning-rate decay");
  mst->add_option("--l2", mst_args.l2, "L2 coefficient");
  mst->add_option("--batch-size", mst_args.batch_size, "mini-batch size");
  mst->add_flag("--no-warm-start", mst_args.no_warm_start,
                "train each stage from scratch");
  mst->add_flag("--no-reuse", mst_args.no_reuse,
                "drop earlier stages' randomized labels");
  mst->add_option("--seed", mst_args.seed, "master seed")->envname("LABELRAND_SEED");
  mst->add_option("--out", mst_args.out_dir, "output directory");

  ScoArgs sco_args;
  auto* sco = app.add_subcommand("sco", "label-private SCO benchmarks");
  sco->add_option("--problem", sco_args.problem, "lower-bound | softmax-blob");
  sco->add_option("--algorithm", sco_args.algorithm, "rr-sgd | normal-sgd");
  sco->add_option("--n", sco_args.n, "samples per run");
  sco->add_option("--eps", sco_args.eps, "privacy budget");
  sco->add_option("--delta", sco_args.delta, "delta for normal-sgd");
  sco->add_option("--diameter", sco_args.diameter, "parameter ball diameter");
  sco->add_option("--lipschitz", sco_args.lipschitz, "Lipschitz constant");
  sco->add_option("--classes", sco_args.classes, "blob label count");
  sco->add_option("--dim", sco_args.dim, "blob feature dimension");
  sco->add_option("--separation", sco_args.separation, "blob mean separation");
  sco->add_option("--seeds", sco_args.seeds, "number of seeds");
  sco->add_option("--seed", sco_args.seed, "base seed")->envname("LABELRAND_SEED");
  sco->add_option("--out", sco_args.out, "results CSV path (default stdout)");

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  verify_cmd->add_option("suite", verify_args.suite,
                         "dp | optimality | unbiased | dlaplace")->required();
  verify_cmd->add_option("--mechanism", verify_args.mechanism,
                         "dp: check one mechanism instead of the grid");
  verify_cmd->add_option("--prior", verify_args.prior_text,
                         "dp: comma-separated prior for the single check");
  verify_cmd->add_option("--eps", verify_args.eps, "dp: actual mechanism budget");
  verify_cmd->add_option("--claim-eps", verify_args.claim_eps,
                         "dp: declared budget to verify against");
  verify_cmd->add_option("--classes", verify_args.classes, "max label count");
  verify_cmd->add_option("--k", verify_args.top_k, "dp: k for the top-k mechanism");
  verify_cmd->add_option("--trials", verify_args.trials, "random priors/instances");
  verify_cmd->add_option("--draws", verify_args.draws, "dlaplace: draws per scale");
  verify_cmd->add_option("--scales", verify_args.scales_text,
                         "dlaplace: comma-separated noise scales");
  verify_cmd->add_option("--seed", verify_args.seed, "suite seed")
      ->envname("LABELRAND_SEED");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth-blobs",
                                   "generate a Gaussian-blob benchmark dataset");
  synth->add_option("--n", synth_args.n, "training examples");
  synth->add_option("--test-n", synth_args.test_n, "held-out examples");
  synth->add_option("--classes", synth_args.classes, "label count");
  synth->add_option("--dim", synth_args.dim, "feature dimension");
  synth->add_option("--separation", synth_args.separation, "mean separation");
  synth->add_option("--seed", synth_args.seed, "seed")->envname("LABELRAND_SEED");
  synth->add_option("--out", synth_args.out_dir, "output directory");

  try {
    app.parse(argc, argv);
    if (randomize->parsed()) return run_randomize(randomize_args);
    if (priors->parsed()) return run_priors(priors_args);
    if (mst->parsed()) {
      if (!mst_args.config_path.empty()) apply_mst_config(*mst, mst_args);
      return run_mst(mst_args);
    }
    if (sco->parsed()) return run_sco(sco_args);
    if (verify_cmd->parsed()) return run_verify(verify_args);
    if (synth->parsed()) return run_synth(synth_args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitInputError;
  } catch (const InputError& e) {
    std::fprintf(stderr, "labelrand: %s\n", e.what());
    return kExitInputError;
  } catch (const PrivacyError& e) {
    std::fprintf(stderr, "labelrand: privacy violation: %s\n", e.what());
    return kExitRuntimeError;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "labelrand: %s\n", e.what());
    return kExitRuntimeError;
  }
  return kExitOk;
}
