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
#ifndef LABELRAND_CORE_HPP_
#define LABELRAND_CORE_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace labelrand {

inline constexpr const char* kVersion = "0.1.0";

// Bad inputs or parameters (CLI exit code 2).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Violations of the one-query-per-label discipline (CLI exit code 3).
class PrivacyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite parameters during optimization (CLI exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The label alphabet: labels are indices 0..num_classes-1.
struct LabelSpace {
  int num_classes = 2;
};

void validate(const LabelSpace& space);

// epsilon in nats, finite and >= 0; delta in [0, 1), 0 for pure DP.
// Infinite epsilon is rejected: callers wanting no privacy skip the mechanism.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

void validate(const PrivacyBudget& budget);
void require_pure(const PrivacyBudget& budget);

// A probability vector over the label alphabet. Entries must be nonnegative
// and sum to 1 within 1e-9; zero entries are legal.
class Prior {
 public:
  explicit Prior(std::vector<double> probs);

  static Prior uniform(int num_classes);

  const std::vector<double>& probs() const { return probs_; }
  int num_classes() const { return static_cast<int>(probs_.size()); }
  double prob(int label) const { return probs_[static_cast<size_t>(label)]; }

 private:
  std::vector<double> probs_;
};

}  // namespace labelrand

#endif  // LABELRAND_CORE_HPP_
