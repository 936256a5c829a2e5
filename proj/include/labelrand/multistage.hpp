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
// Multi-stage label-private training. The data is partitioned up front;
// each stage randomizes its partition's labels once via the prior-adaptive
// mechanism, with priors predicted by the most recent model, then trains on
// everything randomized so far. Because every true label is consumed by
// exactly one randomization (enforced by the ledger), the stages compose in
// parallel and the whole run spends the single per-label budget.

#ifndef LABELRAND_MULTISTAGE_HPP_
#define LABELRAND_MULTISTAGE_HPP_

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/mechanisms.hpp"
#include "labelrand/priors.hpp"
#include "labelrand/rng.hpp"

namespace labelrand {

// Stage count and per-stage data fractions (positive, summing to 1).
struct StagePlan {
  int num_stages = 1;
  std::vector<double> splits;
  uint64_t seed = 0;

  static StagePlan even(int num_stages, uint64_t seed = 0);
};

void validate(const StagePlan& plan);

// Records which stage consumed each example's true label. Consuming an id
// twice is a privacy violation and always a hard error; check-and-mark is
// atomic per id.
class StageLedger {
 public:
  void consume(const std::string& id, int stage);
  std::optional<int> stage_of(const std::string& id) const;
  size_t consumed_count() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, int> consumed_;
};

class ProbabilisticModel {
 public:
  virtual ~ProbabilisticModel() = default;
  virtual std::vector<double> predict_logits(const std::vector<double>& x) const = 0;
  virtual int num_classes() const = 0;
};

// The trivial model: equal probability for every class.
class UniformModel : public ProbabilisticModel {
 public:
  explicit UniformModel(int num_classes) : num_classes_(num_classes) {}
  std::vector<double> predict_logits(const std::vector<double>&) const override {
    return std::vector<double>(static_cast<size_t>(num_classes_), 0.0);
  }
  int num_classes() const override { return num_classes_; }

 private:
  int num_classes_;
};

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 0.1;
  double lr_decay = 1.0;  // per-epoch multiplier
  double l2 = 1e-4;
  double mixup_alpha = 0.0;  // 0 disables mixup
  Temperature temperature{1.0};
  int batch_size = 64;
};

void validate(const TrainConfig& config);

// Training set with the true labels behind a counting accessor. The
// randomization path reads labels only through take_label (counted, one per
// example over a run); diagnostics that legitimately retain labels use
// label_for_diagnostics, which is never part of a privacy-facing output.
class LabeledDataset {
 public:
  LabeledDataset(std::vector<std::string> ids,
                 std::vector<std::vector<double>> features,
                 std::vector<int> labels, int num_classes);

  size_t size() const { return ids_.size(); }
  int num_classes() const { return num_classes_; }
  size_t feature_dim() const { return features_.empty() ? 0 : features_.front().size(); }
  const std::string& id(size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<double>& features(size_t i) const { return features_[i]; }

  int take_label(size_t i) const;
  int label_for_diagnostics(size_t i) const { return labels_[i]; }
  const std::vector<uint32_t>& label_access_counts() const { return access_counts_; }

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> features_;
  std::vector<int> labels_;
  int num_classes_;
  mutable std::vector<uint32_t> access_counts_;
};

struct RandomizedExample {
  size_t index = 0;  // into the dataset
  std::string id;
  int y_tilde = 0;
  int k_star = 0;
  int stage = 0;
};

// Random disjoint cover of ids with sizes matching the plan fractions within
// rounding. Uses only the ids, never any label.
std::vector<std::vector<std::string>> partition(
    const std::vector<std::string>& ids, const StagePlan& plan, Rng& rng);

// Randomizes one partition's labels: per example, the prior is the
// temperature-scaled softmax of the model's logits, and the label is queried
// once through the prior-adaptive mechanism. Marks each id consumed in the
// ledger first; a consumed id is a hard error, never a silent re-draw.
// Per-example randomness is keyed by the id, so results do not depend on
// iteration order.
std::vector<RandomizedExample> run_stage(int stage_index,
                                         const LabeledDataset& data,
                                         const std::vector<size_t>& members,
                                         const ProbabilisticModel& prior_model,
                                         PrivacyBudget budget,
                                         StageLedger& ledger, Temperature temp,
                                         const Rng& rng);

struct ReusableExample {
  const std::vector<double>* x = nullptr;
  int y_tilde = 0;
  size_t index = 0;
};

// Keeps (x, y_tilde) iff y_tilde is among the model's top-k predicted
// classes for x (logit descending, ties to the smaller label).
std::vector<ReusableExample> filter_reused(
    const std::vector<ReusableExample>& labeled,
    const ProbabilisticModel& model, int k);

std::vector<int> top_k_of_logits(const std::vector<double>& logits, int k);

// Multinomial logistic regression trained by mini-batch SGD; weights are
// row-major [num_classes][feature_dim + 1] with the bias last.
class SoftmaxModel : public ProbabilisticModel {
 public:
  SoftmaxModel(int num_classes, int feature_dim);

  std::vector<double> predict_logits(const std::vector<double>& x) const override;
  int num_classes() const override { return num_classes_; }
  int feature_dim() const { return feature_dim_; }

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  int num_classes_;
  int feature_dim_;
  std::vector<double> weights_;
};

struct TrainExample {
  const std::vector<double>* x = nullptr;
  int label = 0;
};

// Mini-batch SGD with L2 regularization and optional mixup (convex input
// and one-hot-label combinations with Beta(alpha, alpha) weights). With
// zero epochs the initial model is returned unchanged. Non-finite training
// loss raises DivergenceError.
std::shared_ptr<SoftmaxModel> softmax_learner_train(
    const std::vector<TrainExample>& data, const TrainConfig& config,
    const SoftmaxModel* init, int num_classes, int feature_dim, Rng& rng);

using Learner = std::function<std::shared_ptr<ProbabilisticModel>(
    const std::vector<TrainExample>& data, const TrainConfig& config,
    const ProbabilisticModel* init, Rng& rng)>;

Learner make_softmax_learner(int num_classes, int feature_dim);

struct LpMstOptions {
  StagePlan plan;
  PrivacyBudget budget;
  TrainConfig train;
  bool warm_start = true;    // initialize stage t from the stage t-1 model
  bool reuse_labels = true;  // retrain on earlier stages' randomized labels
  std::optional<int> reuse_top_k;  // default: rounded mean k* of the stage
  bool compute_match_rate = true;  // diagnostic Pr[y_tilde = y]; reads labels
                                   // through the uncounted accessor
};

struct StageReport {
  int stage = 0;
  size_t fresh_examples = 0;
  size_t reused_examples = 0;
  double mean_k_star = 0.0;
  double match_rate = 0.0;  // only when compute_match_rate
};

struct LpMstResult {
  std::vector<std::shared_ptr<ProbabilisticModel>> stage_models;
  std::shared_ptr<ProbabilisticModel> final_model;
  std::vector<StageReport> stages;
  std::vector<RandomizedExample> randomized;
  PrivacyBudget spent;  // the single per-label budget, by parallel composition
};

LpMstResult lp_mst(const LabeledDataset& data, const LpMstOptions& options,
                   const Learner& learner, const Rng& rng);

}  // namespace labelrand

#endif  // LABELRAND_MULTISTAGE_HPP_
