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
// Verification suites behind the CLI `verify` subcommand. Each suite runs a
// grid of independent checks against the library's analytic oracles and
// reports one result per check.

#ifndef LABELRAND_VERIFY_HPP_
#define LABELRAND_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/mechanisms.hpp"
#include "labelrand/rng.hpp"

namespace labelrand::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

// Symmetric Dirichlet(1) draw: exponentials normalized to sum 1.
Prior random_dirichlet_prior(int num_classes, Rng& rng);

// True iff any two rows of the table differ by more than tol, i.e. the
// mechanism's output actually depends on its input.
bool input_dependent(const MechanismPmf& pmf, double tol = 1e-12);

// For every (eps, K, prior) cell and every mechanism (classic, top-k for all
// k, with-prior): the DP check must pass at the declared eps and, whenever
// the table is input-dependent, fail at eps - 0.01.
SuiteResult dp_suite(const std::vector<double>& eps_grid,
                     const std::vector<int>& class_grid, int priors_per_cell,
                     uint64_t seed);

// The prior-adaptive mechanism's objective must match the brute-force subset
// maximum within 1e-12 across the grid of random priors.
SuiteResult optimality_suite(const std::vector<int>& class_grid,
                             const std::vector<double>& eps_grid, int trials,
                             uint64_t seed);

// Exhaustive-expectation unbiasedness of the debiased gradient and loss on
// random small instances (K <= 6, p <= 5, softmax and linear losses), within
// 1e-10.
SuiteResult unbiased_suite(int trials, uint64_t seed);

// Empirical-vs-analytic total variation of the discrete Laplace sampler at
// each scale, plus the analytic eps_p ratio bound of the noisy histogram
// query for a small case (K = 3 bins, 5 examples, one label substituted).
SuiteResult dlaplace_suite(const std::vector<double>& scales, int64_t draws,
                           double tv_threshold, uint64_t seed);

// Half L1 distance between the empirical pmf of `draws` samples and the
// analytic pmf (including the analytic mass outside the observed range).
double empirical_dlaplace_tv(double scale, int64_t draws, Rng& rng);

// Max over output count vectors in a window of the likelihood ratio between
// two neighboring label histograms (one substitution: one bin down, another
// up by 1), with per-bin discrete Laplace noise of scale eps_p / 2. Equals
// e^{eps_p} when the window covers the maximizing outputs.
double histogram_neighbor_ratio(double eps_p, int window);

}  // namespace labelrand::verify

#endif  // LABELRAND_VERIFY_HPP_
