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
#include "labelrand/multistage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace labelrand {

StagePlan StagePlan::even(int num_stages, uint64_t seed) {
  StagePlan plan;
  plan.num_stages = num_stages;
  plan.seed = seed;
  if (num_stages >= 1) {
    plan.splits.assign(static_cast<size_t>(num_stages), 1.0 / num_stages);
  }
  return plan;
}

void validate(const StagePlan& plan) {
  if (plan.num_stages < 1) {
    throw InputError("StagePlan: need at least one stage");
  }
  if (plan.splits.size() != static_cast<size_t>(plan.num_stages)) {
    throw InputError("StagePlan: splits must have one fraction per stage");
  }
  double sum = 0.0;
  for (double f : plan.splits) {
    if (!(f > 0.0)) throw InputError("StagePlan: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InputError("StagePlan: fractions must sum to 1 within 1e-9");
  }
}

void StageLedger::consume(const std::string& id, int stage) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = consumed_.emplace(id, stage);
  if (!inserted) {
    throw PrivacyError("label of example '" + id +
                       "' was already consumed by stage " +
                       std::to_string(it->second));
  }
}

std::optional<int> StageLedger::stage_of(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = consumed_.find(id);
  if (it == consumed_.end()) return std::nullopt;
  return it->second;
}

size_t StageLedger::consumed_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return consumed_.size();
}

void validate(const TrainConfig& config) {
  if (config.epochs < 0) throw InputError("TrainConfig: epochs must be >= 0");
  if (!(config.learning_rate > 0.0)) {
    throw InputError("TrainConfig: learning_rate must be > 0");
  }
  if (!(config.lr_decay > 0.0 && config.lr_decay <= 1.0)) {
    throw InputError("TrainConfig: lr_decay must lie in (0, 1]");
  }
  if (config.l2 < 0.0) throw InputError("TrainConfig: l2 must be >= 0");
  if (config.mixup_alpha < 0.0) {
    throw InputError("TrainConfig: mixup_alpha must be >= 0");
  }
  validate(config.temperature);
  if (config.batch_size < 1) {
    throw InputError("TrainConfig: batch_size must be >= 1");
  }
}

LabeledDataset::LabeledDataset(std::vector<std::string> ids,
                               std::vector<std::vector<double>> features,
                               std::vector<int> labels, int num_classes)
    : ids_(std::move(ids)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes) {
  validate(LabelSpace{num_classes_});
  if (ids_.size() != features_.size() || ids_.size() != labels_.size()) {
    throw InputError("LabeledDataset: ids, features, labels misaligned");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) {
      throw InputError("LabeledDataset: duplicate id '" + id + "'");
    }
  }
  const size_t dim = feature_dim();
  for (const auto& row : features_) {
    if (row.size() != dim) {
      throw InputError("LabeledDataset: feature rows of unequal dimension");
    }
  }
  for (int y : labels_) {
    if (y < 0 || y >= num_classes_) {
      throw InputError("LabeledDataset: label outside [0, K)");
    }
  }
  access_counts_.assign(ids_.size(), 0);
}

int LabeledDataset::take_label(size_t i) const {
  ++access_counts_[i];
  return labels_[i];
}

std::vector<std::vector<std::string>> partition(
    const std::vector<std::string>& ids, const StagePlan& plan, Rng& rng) {
  validate(plan);
  if (ids.empty()) throw InputError("partition: empty id list");

  std::vector<std::string> shuffled = ids;
  rng.shuffle(shuffled);

  const size_t n = shuffled.size();
  std::vector<std::vector<std::string>> parts;
  parts.reserve(static_cast<size_t>(plan.num_stages));
  double cumulative = 0.0;
  size_t start = 0;
  for (int t = 0; t < plan.num_stages; ++t) {
    cumulative += plan.splits[static_cast<size_t>(t)];
    size_t end = (t == plan.num_stages - 1)
                     ? n
                     : static_cast<size_t>(std::llround(cumulative * n));
    end = std::min(end, n);
    end = std::max(end, start);
    parts.emplace_back(shuffled.begin() + static_cast<ptrdiff_t>(start),
                       shuffled.begin() + static_cast<ptrdiff_t>(end));
    start = end;
  }
  return parts;
}

std::vector<RandomizedExample> run_stage(int stage_index,
                                         const LabeledDataset& data,
                                         const std::vector<size_t>& members,
                                         const ProbabilisticModel& prior_model,
                                         PrivacyBudget budget,
                                         StageLedger& ledger, Temperature temp,
                                         const Rng& rng) {
  require_pure(budget);
  validate(temp);
  std::vector<RandomizedExample> out;
  out.reserve(members.size());
  for (size_t i : members) {
    const std::string& id = data.id(i);
    ledger.consume(id, stage_index);

    Prior prior = temperature_scale(prior_model.predict_logits(data.features(i)), temp);
    RrpPlan plan = rrp_plan(prior, budget);
    Rng example_rng = rng.fork(fnv1a64(id));
    int y = data.take_label(i);
    int y_tilde = rr_with_plan(y, plan, data.num_classes(), budget, example_rng);
    out.push_back({i, id, y_tilde, plan.k_star, stage_index});
  }
  return out;
}

std::vector<int> top_k_of_logits(const std::vector<double>& logits, int k) {
  std::vector<int> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&logits](int a, int b) {
    return logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(b)];
  });
  order.resize(std::min<size_t>(order.size(), static_cast<size_t>(k)));
  return order;
}

std::vector<ReusableExample> filter_reused(
    const std::vector<ReusableExample>& labeled,
    const ProbabilisticModel& model, int k) {
  if (k < 1) throw InputError("filter_reused: k must be >= 1");
  std::vector<ReusableExample> kept;
  kept.reserve(labeled.size());
  for (const auto& example : labeled) {
    std::vector<int> top = top_k_of_logits(model.predict_logits(*example.x), k);
    if (std::find(top.begin(), top.end(), example.y_tilde) != top.end()) {
      kept.push_back(example);
    }
  }
  return kept;
}

SoftmaxModel::SoftmaxModel(int num_classes, int feature_dim)
    : num_classes_(num_classes),
      feature_dim_(feature_dim),
      weights_(static_cast<size_t>(num_classes) *
                   static_cast<size_t>(feature_dim + 1),
               0.0) {
  validate(LabelSpace{num_classes});
  if (feature_dim < 1) throw InputError("SoftmaxModel: feature_dim must be >= 1");
}

std::vector<double> SoftmaxModel::predict_logits(
    const std::vector<double>& x) const {
  if (x.size() != static_cast<size_t>(feature_dim_)) {
    throw InputError("SoftmaxModel: feature dimension mismatch");
  }
  std::vector<double> logits(static_cast<size_t>(num_classes_));
  const size_t stride = static_cast<size_t>(feature_dim_) + 1;
  for (int k = 0; k < num_classes_; ++k) {
    const double* row = weights_.data() + static_cast<size_t>(k) * stride;
    double s = row[feature_dim_];  // bias
    for (int j = 0; j < feature_dim_; ++j) s += row[j] * x[static_cast<size_t>(j)];
    logits[static_cast<size_t>(k)] = s;
  }
  return logits;
}

namespace {

void softmax_inplace(std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : logits) v /= z;
}

}  // namespace

std::shared_ptr<SoftmaxModel> softmax_learner_train(
    const std::vector<TrainExample>& data, const TrainConfig& config,
    const SoftmaxModel* init, int num_classes, int feature_dim, Rng& rng) {
  validate(config);
  auto model = init ? std::make_shared<SoftmaxModel>(*init)
                    : std::make_shared<SoftmaxModel>(num_classes, feature_dim);
  if (model->num_classes() != num_classes || model->feature_dim() != feature_dim) {
    throw InputError("softmax_learner_train: init model shape mismatch");
  }
  if (data.empty() || config.epochs == 0) return model;

  for (const auto& example : data) {
    if (example.x->size() != static_cast<size_t>(feature_dim)) {
      throw InputError("softmax_learner_train: feature dimension mismatch");
    }
    if (example.label < 0 || example.label >= num_classes) {
      throw InputError("softmax_learner_train: label outside [0, K)");
    }
  }

  const size_t n = data.size();
  const size_t stride = static_cast<size_t>(feature_dim) + 1;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> mixed_x(static_cast<size_t>(feature_dim));
  std::vector<double> target(static_cast<size_t>(num_classes));
  std::vector<double>& w = model->weights();

  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;

    for (size_t batch_start = 0; batch_start < n;
         batch_start += static_cast<size_t>(config.batch_size)) {
      const size_t batch_end =
          std::min(n, batch_start + static_cast<size_t>(config.batch_size));
      const size_t batch_n = batch_end - batch_start;

      // One mixing weight per batch; each example pairs with a random peer.
      double lambda = 1.0;
      if (config.mixup_alpha > 0.0) {
        lambda = rng.next_beta(config.mixup_alpha, config.mixup_alpha);
        lambda = std::max(lambda, 1.0 - lambda);
      }

      std::vector<double> grad(w.size(), 0.0);
      for (size_t b = batch_start; b < batch_end; ++b) {
        const TrainExample& ex = data[order[b]];
        const std::vector<double>* x = ex.x;
        std::fill(target.begin(), target.end(), 0.0);
        target[static_cast<size_t>(ex.label)] = 1.0;

        if (config.mixup_alpha > 0.0) {
          const TrainExample& peer =
              data[order[batch_start + rng.next_below(batch_n)]];
          for (int j = 0; j < feature_dim; ++j) {
            mixed_x[static_cast<size_t>(j)] =
                lambda * (*ex.x)[static_cast<size_t>(j)] +
                (1.0 - lambda) * (*peer.x)[static_cast<size_t>(j)];
          }
          target[static_cast<size_t>(ex.label)] = lambda;
          target[static_cast<size_t>(peer.label)] += 1.0 - lambda;
          x = &mixed_x;
        }

        std::vector<double> probs = model->predict_logits(*x);
        double m = *std::max_element(probs.begin(), probs.end());
        double lse = 0.0;
        for (double v : probs) lse += std::exp(v - m);
        for (int k = 0; k < num_classes; ++k) {
          epoch_loss -= target[static_cast<size_t>(k)] *
                        (probs[static_cast<size_t>(k)] - m - std::log(lse));
        }
        softmax_inplace(probs);

        for (int k = 0; k < num_classes; ++k) {
          const double coeff =
              probs[static_cast<size_t>(k)] - target[static_cast<size_t>(k)];
          double* grow = grad.data() + static_cast<size_t>(k) * stride;
          for (int j = 0; j < feature_dim; ++j) {
            grow[j] += coeff * (*x)[static_cast<size_t>(j)];
          }
          grow[feature_dim] += coeff;
        }
      }

      const double scale = lr / static_cast<double>(batch_n);
      for (int k = 0; k < num_classes; ++k) {
        double* wrow = w.data() + static_cast<size_t>(k) * stride;
        const double* grow = grad.data() + static_cast<size_t>(k) * stride;
        for (int j = 0; j < feature_dim; ++j) {
          wrow[j] -= scale * grow[j] + lr * config.l2 * wrow[j];
        }
        wrow[feature_dim] -= scale * grow[feature_dim];  // no decay on bias
      }
    }

    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("softmax_learner_train: non-finite training loss");
    }
    lr *= config.lr_decay;
  }
  return model;
}

Learner make_softmax_learner(int num_classes, int feature_dim) {
  return [num_classes, feature_dim](
             const std::vector<TrainExample>& data, const TrainConfig& config,
             const ProbabilisticModel* init,
             Rng& rng) -> std::shared_ptr<ProbabilisticModel> {
    const SoftmaxModel* warm = dynamic_cast<const SoftmaxModel*>(init);
    return softmax_learner_train(data, config, warm, num_classes, feature_dim,
                                 rng);
  };
}

LpMstResult lp_mst(const LabeledDataset& data, const LpMstOptions& options,
                   const Learner& learner, const Rng& rng) {
  validate(options.plan);
  require_pure(options.budget);
  validate(options.train);
  if (!(options.budget.epsilon > 0.0)) {
    throw InputError("lp_mst: epsilon must be > 0");
  }

  Rng partition_rng = rng.fork("partition");
  std::vector<std::vector<std::string>> parts =
      partition(data.ids(), options.plan, partition_rng);

  std::unordered_map<std::string, size_t> index_of;
  index_of.reserve(data.size());
  for (size_t i = 0; i < data.size(); ++i) index_of.emplace(data.id(i), i);

  StageLedger ledger;
  LpMstResult result;
  result.spent = options.budget;

  std::shared_ptr<ProbabilisticModel> current =
      std::make_shared<UniformModel>(data.num_classes());
  std::vector<std::vector<RandomizedExample>> per_stage;

  for (int t = 1; t <= options.plan.num_stages; ++t) {
    std::vector<size_t> members;
    members.reserve(parts[static_cast<size_t>(t - 1)].size());
    for (const auto& id : parts[static_cast<size_t>(t - 1)]) {
      members.push_back(index_of.at(id));
    }

    std::vector<RandomizedExample> randomized =
        run_stage(t, data, members, *current, options.budget, ledger,
                  options.train.temperature, rng);

    StageReport report;
    report.stage = t;
    report.fresh_examples = randomized.size();
    double k_sum = 0.0;
    size_t matches = 0;
    for (const auto& r : randomized) {
      k_sum += r.k_star;
      if (options.compute_match_rate &&
          r.y_tilde == data.label_for_diagnostics(r.index)) {
        ++matches;
      }
    }
    if (!randomized.empty()) {
      report.mean_k_star = k_sum / static_cast<double>(randomized.size());
      if (options.compute_match_rate) {
        report.match_rate =
            static_cast<double>(matches) / static_cast<double>(randomized.size());
      }
    }

    std::vector<TrainExample> train_set;
    train_set.reserve(data.size());
    for (const auto& r : randomized) {
      train_set.push_back({&data.features(r.index), r.y_tilde});
    }

    if (options.reuse_labels && t > 1) {
      int reuse_k = options.reuse_top_k.value_or(
          std::clamp(static_cast<int>(std::llround(report.mean_k_star)), 1,
                     data.num_classes()));
      for (const auto& stage_examples : per_stage) {
        std::vector<ReusableExample> candidates;
        candidates.reserve(stage_examples.size());
        for (const auto& r : stage_examples) {
          candidates.push_back({&data.features(r.index), r.y_tilde, r.index});
        }
        std::vector<ReusableExample> kept =
            filter_reused(candidates, *current, reuse_k);
        report.reused_examples += kept.size();
        for (const auto& r : kept) train_set.push_back({r.x, r.y_tilde});
      }
    }

    Rng learner_rng = rng.fork("learner").fork(static_cast<uint64_t>(t));
    const ProbabilisticModel* init =
        (options.warm_start && t > 1) ? current.get() : nullptr;
    std::shared_ptr<ProbabilisticModel> trained =
        learner(train_set, options.train, init, learner_rng);

    result.stage_models.push_back(trained);
    result.stages.push_back(report);
    per_stage.push_back(std::move(randomized));
    current = trained;
  }

  for (auto& stage_examples : per_stage) {
    for (auto& r : stage_examples) result.randomized.push_back(std::move(r));
  }
  result.final_model = current;
  return result;
}

}  // namespace labelrand
