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
// Independent oracles for the two load-bearing claims about the mechanisms:
// that the prior-adaptive randomizer attains the best possible probability
// of returning the true label among all eps-DP randomizers, and that every
// mechanism table actually satisfies the eps-DP ratio bound. The optimum is
// found by scoring every nonempty label subset, deliberately ignoring the
// structural insight that only top-mass subsets can win, so the oracle stays
// independent of the construction it checks.

#ifndef LABELRAND_OPTIMALITY_HPP_
#define LABELRAND_OPTIMALITY_HPP_

#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/mechanisms.hpp"

namespace labelrand {

// One scored subset: score = e^eps/(e^eps+|Y|-1) * sum of prior mass on Y.
struct SubsetScore {
  std::vector<int> subset;  // ascending label indices, nonempty
  double score = 0.0;
};

// Scores all 2^K - 1 nonempty subsets and returns the maximizer; ties go to
// the lexicographically smallest subset. K above `k_limit` is refused since
// the enumeration is exponential.
SubsetScore brute_force_optimum(const Prior& prior, PrivacyBudget budget,
                                int k_limit = 20);

struct DpCheck {
  bool ok = false;
  double worst_ratio = 0.0;
};

// Worst pointwise ratio max over (out, y, y') of q(out|y) / q(out|y'), with
// 0/0 treated as 1 and x/0 (x > 0) as +infinity. Passes iff the worst ratio
// is at most e^eps * (1 + 1e-9); the relative slack absorbs division noise.
DpCheck verify_dp(const MechanismPmf& pmf, PrivacyBudget budget);

// True iff the prior-adaptive mechanism's objective matches the brute-force
// subset maximum within 1e-12 and the maximizing subset carries the same
// prior mass as a top-|Y| set.
bool verify_rrp_optimal(const Prior& prior, PrivacyBudget budget);

}  // namespace labelrand

#endif  // LABELRAND_OPTIMALITY_HPP_
