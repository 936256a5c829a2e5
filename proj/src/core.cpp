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
#include "labelrand/core.hpp"

#include <cmath>

namespace labelrand {

void validate(const LabelSpace& space) {
  if (space.num_classes < 2) {
    throw InputError("LabelSpace: need at least 2 classes, got " +
                     std::to_string(space.num_classes));
  }
}

void validate(const PrivacyBudget& budget) {
  if (!std::isfinite(budget.epsilon) || budget.epsilon < 0.0) {
    throw InputError("PrivacyBudget: epsilon must be finite and >= 0");
  }
  if (!(budget.delta >= 0.0 && budget.delta < 1.0)) {
    throw InputError("PrivacyBudget: delta must lie in [0, 1)");
  }
}

void require_pure(const PrivacyBudget& budget) {
  validate(budget);
  if (budget.delta != 0.0) {
    throw InputError("this mechanism is pure-DP only; delta must be 0");
  }
}

Prior::Prior(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw InputError("Prior: need at least 2 entries");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InputError("Prior: entries must be finite and nonnegative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InputError("Prior: entries must sum to 1 within 1e-9, got sum " +
                     std::to_string(sum));
  }
}

Prior Prior::uniform(int num_classes) {
  validate(LabelSpace{num_classes});
  return Prior(std::vector<double>(static_cast<size_t>(num_classes),
                                   1.0 / num_classes));
}

}  // namespace labelrand
