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
#include "labelrand/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace labelrand {

SubsetScore brute_force_optimum(const Prior& prior, PrivacyBudget budget,
                                int k_limit) {
  require_pure(budget);
  const int num_classes = prior.num_classes();
  if (num_classes > k_limit) {
    throw InputError("brute_force_optimum: K=" + std::to_string(num_classes) +
                     " exceeds enumeration limit " + std::to_string(k_limit));
  }
  const double e = std::exp(budget.epsilon);
  if (!std::isfinite(e)) {
    throw InputError("brute_force_optimum: epsilon overflows e^epsilon");
  }

  auto subset_of = [](uint32_t mask) {
    std::vector<int> subset;
    for (int i = 0; mask != 0; ++i, mask >>= 1) {
      if (mask & 1u) subset.push_back(i);
    }
    return subset;
  };

  SubsetScore best;
  best.score = -1.0;
  const uint32_t all = (1u << num_classes) - 1u;
  for (uint32_t mask = 1; mask <= all; ++mask) {
    double mass = 0.0;
    int size = 0;
    for (int i = 0; i < num_classes; ++i) {
      if (mask & (1u << i)) {
        mass += prior.prob(i);
        ++size;
      }
    }
    double score = e / (e + static_cast<double>(size) - 1.0) * mass;
    if (score > best.score) {
      best.score = score;
      best.subset = subset_of(mask);
    } else if (score == best.score) {
      std::vector<int> candidate = subset_of(mask);
      if (std::lexicographical_compare(candidate.begin(), candidate.end(),
                                       best.subset.begin(), best.subset.end())) {
        best.subset = std::move(candidate);
      }
    }
  }
  return best;
}

DpCheck verify_dp(const MechanismPmf& pmf, PrivacyBudget budget) {
  validate(budget);
  const int num_classes = pmf.num_classes();
  double worst = 1.0;
  for (int out = 0; out < num_classes; ++out) {
    for (int y = 0; y < num_classes; ++y) {
      for (int y2 = 0; y2 < num_classes; ++y2) {
        double num = pmf.prob(y, out);
        double den = pmf.prob(y2, out);
        double ratio;
        if (den == 0.0) {
          ratio = (num == 0.0) ? 1.0 : std::numeric_limits<double>::infinity();
        } else {
          ratio = num / den;
        }
        worst = std::max(worst, ratio);
      }
    }
  }
  return {worst <= std::exp(budget.epsilon) * (1.0 + 1e-9), worst};
}

bool verify_rrp_optimal(const Prior& prior, PrivacyBudget budget) {
  SubsetScore best = brute_force_optimum(prior, budget);
  double rrp = objective(prior, mechanism_pmf(MechanismSpec::with_prior(),
                                              prior, budget));
  if (std::abs(rrp - best.score) > 1e-12) return false;

  // The winning subset must carry exactly as much prior mass as a top-|Y| set.
  double subset_mass = 0.0;
  for (int label : best.subset) subset_mass += prior.prob(label);
  double top_mass = 0.0;
  for (int label : top_k_labels(prior, static_cast<int>(best.subset.size()))) {
    top_mass += prior.prob(label);
  }
  return std::abs(subset_mass - top_mass) <= 1e-12;
}

}  // namespace labelrand
