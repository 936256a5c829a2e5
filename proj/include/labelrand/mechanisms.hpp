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
// Label randomizers: classic randomized response over the full alphabet,
// randomized response restricted to the top-k prior labels, and the
// prior-adaptive variant that picks the k maximizing the probability of
// returning the true label. Every mechanism is available both as a sampler
// and as an exact conditional output table, and the samplers draw by
// inverse-CDF over that exact table, so the two views agree by construction.

#ifndef LABELRAND_MECHANISMS_HPP_
#define LABELRAND_MECHANISMS_HPP_

#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/rng.hpp"

namespace labelrand {

// The precomputed decision of the prior-adaptive mechanism for one prior:
// weights[k-1] = e^eps/(e^eps+k-1) * (mass of the k largest prior entries),
// k_star = argmax (ties resolved to the smallest k), and top_set = the
// k_star labels of largest prior mass (prob descending, ties to the smaller
// label index). Depends only on (prior, epsilon), never on any label.
struct RrpPlan {
  std::vector<double> weights;
  int k_star = 0;
  std::vector<int> top_set;
};

// Exact conditional output table: row(y)[out] = Pr[mechanism(y) = out].
class MechanismPmf {
 public:
  explicit MechanismPmf(std::vector<std::vector<double>> rows);

  int num_classes() const { return static_cast<int>(rows_.size()); }
  const std::vector<double>& row(int y) const { return rows_[static_cast<size_t>(y)]; }
  double prob(int y, int out) const { return rows_[static_cast<size_t>(y)][static_cast<size_t>(out)]; }

 private:
  std::vector<std::vector<double>> rows_;
};

struct MechanismSpec {
  enum class Kind { kClassic, kTopK, kWithPrior };

  Kind kind = Kind::kClassic;
  int k = 0;  // only used by kTopK

  static MechanismSpec classic() { return {Kind::kClassic, 0}; }
  static MechanismSpec top_k(int k) { return {Kind::kTopK, k}; }
  static MechanismSpec with_prior() { return {Kind::kWithPrior, 0}; }
};

// The k labels of largest prior probability; ties broken by smaller label
// index. Returned in (prob descending, index ascending) order.
std::vector<int> top_k_labels(const Prior& prior, int k);

// Conditional output row of randomized response restricted to `support`:
// if y is a member, y keeps probability e^eps/(e^eps+k-1) and each other
// member gets 1/(e^eps+k-1); otherwise the row is uniform over the support.
std::vector<double> conditional_row(int y, const std::vector<int>& support,
                                    int num_classes, double epsilon);

// Randomized response over `support` applied to label y (y need not be a
// member; the out-of-support branch is uniform over the support).
int rr_over_support(int y, const std::vector<int>& support, int num_classes,
                    PrivacyBudget budget, Rng& rng);

// Classic randomized response over the full alphabet.
int rr_classic(int y, LabelSpace space, PrivacyBudget budget, Rng& rng);

// Randomized response over the k highest-prior labels.
int rr_top_k(int y, const Prior& prior, int k, PrivacyBudget budget, Rng& rng);

// Weight table, k*, and top set for the prior-adaptive mechanism.
RrpPlan rrp_plan(const Prior& prior, PrivacyBudget budget);

int rr_with_plan(int y, const RrpPlan& plan, int num_classes,
                 PrivacyBudget budget, Rng& rng);

// Prior-adaptive randomized response: rr_top_k at the plan's k*.
int rr_with_prior(int y, const Prior& prior, PrivacyBudget budget, Rng& rng);

// Exact K x K conditional output table of the requested mechanism.
MechanismPmf mechanism_pmf(MechanismSpec spec, const Prior& prior,
                           PrivacyBudget budget);

// Pr[mechanism(y) = y] under y ~ prior: the dot product of the prior with
// the table diagonal.
double objective(const Prior& prior, const MechanismPmf& pmf);

}  // namespace labelrand

#endif  // LABELRAND_MECHANISMS_HPP_
