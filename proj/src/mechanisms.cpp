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
#include "labelrand/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace labelrand {

namespace {

void check_label(int y, int num_classes) {
  if (y < 0 || y >= num_classes) {
    throw InputError("label " + std::to_string(y) + " outside [0, " +
                     std::to_string(num_classes) + ")");
  }
}

// Inverse-CDF draw from an explicit probability row.
int sample_row(const std::vector<double>& row, Rng& rng) {
  double u = rng.next_double();
  double acc = 0.0;
  for (size_t i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (size_t i = row.size(); i-- > 0;) {
    if (row[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(row.size()) - 1;
}

std::vector<int> full_alphabet(int num_classes) {
  std::vector<int> all(static_cast<size_t>(num_classes));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

// e^epsilon, rejecting budgets large enough to overflow the arithmetic the
// mechanism probabilities are built from.
double exp_epsilon(double epsilon) {
  double e = std::exp(epsilon);
  if (!std::isfinite(e)) {
    throw InputError("epsilon=" + std::to_string(epsilon) +
                     " overflows e^epsilon; use a smaller budget");
  }
  return e;
}

}  // namespace

MechanismPmf::MechanismPmf(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  for (const auto& row : rows_) {
    if (row.size() != rows_.size()) {
      throw InputError("MechanismPmf: table must be square");
    }
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw InputError("MechanismPmf: negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InputError("MechanismPmf: row sums to " + std::to_string(sum));
    }
  }
}

std::vector<int> top_k_labels(const Prior& prior, int k) {
  const int num_classes = prior.num_classes();
  if (k < 1 || k > num_classes) {
    throw InputError("top_k_labels: k=" + std::to_string(k) +
                     " outside [1, " + std::to_string(num_classes) + "]");
  }
  std::vector<int> order = full_alphabet(num_classes);
  std::stable_sort(order.begin(), order.end(), [&prior](int a, int b) {
    return prior.prob(a) > prior.prob(b);
  });
  order.resize(static_cast<size_t>(k));
  return order;
}

std::vector<double> conditional_row(int y, const std::vector<int>& support,
                                    int num_classes, double epsilon) {
  check_label(y, num_classes);
  const size_t k = support.size();
  if (k == 0 || k > static_cast<size_t>(num_classes)) {
    throw InputError("conditional_row: bad support size");
  }
  std::vector<double> row(static_cast<size_t>(num_classes), 0.0);
  bool member = std::find(support.begin(), support.end(), y) != support.end();
  if (member) {
    const double e = exp_epsilon(epsilon);
    const double stay = e / (e + static_cast<double>(k) - 1.0);
    const double move = 1.0 / (e + static_cast<double>(k) - 1.0);
    for (int out : support) row[static_cast<size_t>(out)] = (out == y) ? stay : move;
  } else {
    const double uniform = 1.0 / static_cast<double>(k);
    for (int out : support) row[static_cast<size_t>(out)] = uniform;
  }
  return row;
}

int rr_over_support(int y, const std::vector<int>& support, int num_classes,
                    PrivacyBudget budget, Rng& rng) {
  require_pure(budget);
  return sample_row(conditional_row(y, support, num_classes, budget.epsilon), rng);
}

int rr_classic(int y, LabelSpace space, PrivacyBudget budget, Rng& rng) {
  validate(space);
  return rr_over_support(y, full_alphabet(space.num_classes),
                         space.num_classes, budget, rng);
}

int rr_top_k(int y, const Prior& prior, int k, PrivacyBudget budget, Rng& rng) {
  check_label(y, prior.num_classes());
  return rr_over_support(y, top_k_labels(prior, k), prior.num_classes(),
                         budget, rng);
}

RrpPlan rrp_plan(const Prior& prior, PrivacyBudget budget) {
  require_pure(budget);
  const int num_classes = prior.num_classes();
  const double e = exp_epsilon(budget.epsilon);

  std::vector<int> order = top_k_labels(prior, num_classes);
  RrpPlan plan;
  plan.weights.resize(static_cast<size_t>(num_classes));
  double mass = 0.0;
  double best = -1.0;
  for (int k = 1; k <= num_classes; ++k) {
    mass += prior.prob(order[static_cast<size_t>(k - 1)]);
    double w = e / (e + static_cast<double>(k) - 1.0) * mass;
    plan.weights[static_cast<size_t>(k - 1)] = w;
    if (w > best) {  // ties go to the smallest k
      best = w;
      plan.k_star = k;
    }
  }
  order.resize(static_cast<size_t>(plan.k_star));
  plan.top_set = std::move(order);
  return plan;
}

int rr_with_plan(int y, const RrpPlan& plan, int num_classes,
                 PrivacyBudget budget, Rng& rng) {
  return rr_over_support(y, plan.top_set, num_classes, budget, rng);
}

int rr_with_prior(int y, const Prior& prior, PrivacyBudget budget, Rng& rng) {
  check_label(y, prior.num_classes());
  RrpPlan plan = rrp_plan(prior, budget);
  return rr_with_plan(y, plan, prior.num_classes(), budget, rng);
}

MechanismPmf mechanism_pmf(MechanismSpec spec, const Prior& prior,
                           PrivacyBudget budget) {
  require_pure(budget);
  const int num_classes = prior.num_classes();

  std::vector<int> support;
  switch (spec.kind) {
    case MechanismSpec::Kind::kClassic:
      support = full_alphabet(num_classes);
      break;
    case MechanismSpec::Kind::kTopK:
      support = top_k_labels(prior, spec.k);
      break;
    case MechanismSpec::Kind::kWithPrior:
      support = rrp_plan(prior, budget).top_set;
      break;
  }

  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(num_classes));
  for (int y = 0; y < num_classes; ++y) {
    rows.push_back(conditional_row(y, support, num_classes, budget.epsilon));
  }
  return MechanismPmf(std::move(rows));
}

double objective(const Prior& prior, const MechanismPmf& pmf) {
  if (prior.num_classes() != pmf.num_classes()) {
    throw InputError("objective: prior and pmf dimensions disagree");
  }
  double value = 0.0;
  for (int y = 0; y < prior.num_classes(); ++y) {
    value += prior.prob(y) * pmf.prob(y, y);
  }
  return value;
}

}  // namespace labelrand
