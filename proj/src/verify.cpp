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
#include "labelrand/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>

#include "labelrand/optimality.hpp"
#include "labelrand/priors.hpp"
#include "labelrand/sco.hpp"

namespace labelrand::verify {

namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

}  // namespace

Prior random_dirichlet_prior(int num_classes, Rng& rng) {
  std::vector<double> p(static_cast<size_t>(num_classes));
  double sum = 0.0;
  for (double& v : p) {
    v = -std::log(rng.next_open_double());
    sum += v;
  }
  for (double& v : p) v /= sum;
  return Prior(std::move(p));
}

bool input_dependent(const MechanismPmf& pmf, double tol) {
  const int num_classes = pmf.num_classes();
  for (int y = 1; y < num_classes; ++y) {
    for (int out = 0; out < num_classes; ++out) {
      if (std::abs(pmf.prob(y, out) - pmf.prob(0, out)) > tol) return true;
    }
  }
  return false;
}

SuiteResult dp_suite(const std::vector<double>& eps_grid,
                     const std::vector<int>& class_grid, int priors_per_cell,
                     uint64_t seed) {
  SuiteResult suite;
  Rng rng(seed);

  auto run_one = [](const MechanismPmf& pmf, double eps) {
    DpCheck at_eps = verify_dp(pmf, PrivacyBudget{eps, 0.0});
    bool ok = at_eps.ok;
    if (input_dependent(pmf) && eps > 0.01) {
      DpCheck tightened = verify_dp(pmf, PrivacyBudget{eps - 0.01, 0.0});
      ok = ok && !tightened.ok;
    }
    return std::make_pair(ok, at_eps.worst_ratio);
  };

  for (double eps : eps_grid) {
    const PrivacyBudget budget{eps, 0.0};
    for (int num_classes : class_grid) {
      bool cell_ok = true;
      double worst_seen = 0.0;
      std::string failure;

      // Classic randomized response ignores the prior; check once per cell.
      {
        auto [ok, ratio] = run_one(
            mechanism_pmf(MechanismSpec::classic(),
                          Prior::uniform(num_classes), budget),
            eps);
        cell_ok = cell_ok && ok;
        worst_seen = std::max(worst_seen, ratio);
        if (!ok) failure = "classic";
      }

      Rng cell_rng = rng.fork(fnv1a64("dp-cell"))
                         .fork(static_cast<uint64_t>(num_classes))
                         .fork(static_cast<uint64_t>(eps * 1e6));
      for (int trial = 0; trial < priors_per_cell && cell_ok; ++trial) {
        Prior prior = random_dirichlet_prior(num_classes, cell_rng);
        for (int k = 1; k <= num_classes && cell_ok; ++k) {
          auto [ok, ratio] =
              run_one(mechanism_pmf(MechanismSpec::top_k(k), prior, budget), eps);
          cell_ok = cell_ok && ok;
          worst_seen = std::max(worst_seen, ratio);
          if (!ok) failure = "top-" + std::to_string(k);
        }
        auto [ok, ratio] = run_one(
            mechanism_pmf(MechanismSpec::with_prior(), prior, budget), eps);
        cell_ok = cell_ok && ok;
        worst_seen = std::max(worst_seen, ratio);
        if (!ok) failure = "with-prior";
      }

      CheckResult check;
      check.name = "dp eps=" + format("%g", eps) +
                   " K=" + std::to_string(num_classes);
      check.pass = cell_ok;
      check.detail = cell_ok
                         ? format("worst ratio %.9g vs bound %.9g", worst_seen,
                                  std::exp(eps))
                         : "failed mechanism: " + failure;
      suite.checks.push_back(std::move(check));
    }
  }
  return suite;
}

SuiteResult optimality_suite(const std::vector<int>& class_grid,
                             const std::vector<double>& eps_grid, int trials,
                             uint64_t seed) {
  SuiteResult suite;
  Rng rng(seed);
  for (int num_classes : class_grid) {
    Rng cell_rng = rng.fork(fnv1a64("optimality")).fork(static_cast<uint64_t>(num_classes));
    int failures = 0;
    double worst_gap = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      Prior prior = random_dirichlet_prior(num_classes, cell_rng);
      for (double eps : eps_grid) {
        const PrivacyBudget budget{eps, 0.0};
        if (!verify_rrp_optimal(prior, budget)) {
          ++failures;
          continue;
        }
        double rrp = objective(
            prior, mechanism_pmf(MechanismSpec::with_prior(), prior, budget));
        double brute = brute_force_optimum(prior, budget).score;
        worst_gap = std::max(worst_gap, std::abs(rrp - brute));
      }
    }
    CheckResult check;
    check.name = "optimality K=" + std::to_string(num_classes) + " trials=" +
                 std::to_string(trials);
    check.pass = failures == 0;
    check.detail = check.pass ? format("worst |gap| %.3g", worst_gap)
                              : std::to_string(failures) + " failures";
    suite.checks.push_back(std::move(check));
  }
  return suite;
}

namespace {

// A small random instance for the exhaustive-expectation checks. Losses come
// in two families: per-label linear and softmax cross-entropy.
struct DebiasInstance {
  ScoProblem problem;
  ScalarLoss scalar_loss;
  std::vector<double> w;
  std::vector<double> x;
  double t = 0.0;
};

DebiasInstance random_instance(int num_classes, int dim, bool softmax, Rng& rng) {
  DebiasInstance inst;
  if (softmax) {
    inst.problem = make_softmax_blob_problem(num_classes, dim, 0.0, 0);
  } else {
    auto coeffs = std::make_shared<std::vector<double>>();
    for (int k = 0; k < num_classes; ++k) {
      coeffs->push_back(2.0 * rng.next_double() - 1.0);
    }
    inst.problem.dim = dim;
    inst.problem.diameter = 2.0;
    inst.problem.lipschitz = 1.0;
    inst.problem.labels = LabelSpace{num_classes};
    inst.problem.loss = [coeffs](const std::vector<double>& w,
                                 const std::vector<double>& x, int y) {
      double inner = 0.0;
      for (size_t i = 0; i < w.size(); ++i) inner += w[i] * x[i];
      return (*coeffs)[static_cast<size_t>(y)] * inner;
    };
    inst.problem.gradient = [coeffs](const std::vector<double>& w,
                                     const std::vector<double>& x, int y) {
      std::vector<double> g(w.size());
      for (size_t i = 0; i < g.size(); ++i) {
        g[i] = (*coeffs)[static_cast<size_t>(y)] * x[i];
      }
      return g;
    };
  }

  auto scalar_coeffs = std::make_shared<std::vector<double>>();
  auto scalar_offsets = std::make_shared<std::vector<double>>();
  for (int k = 0; k < num_classes; ++k) {
    scalar_coeffs->push_back(2.0 * rng.next_double() - 1.0);
    scalar_offsets->push_back(2.0 * rng.next_double() - 1.0);
  }
  if (softmax) {
    inst.scalar_loss = [scalar_coeffs, scalar_offsets](
                           double t, const std::vector<double>&, int y) {
      // Softplus of a per-label affine score.
      double s = (*scalar_coeffs)[static_cast<size_t>(y)] * t +
                 (*scalar_offsets)[static_cast<size_t>(y)];
      return std::log1p(std::exp(-std::abs(s))) + std::max(s, 0.0);
    };
  } else {
    inst.scalar_loss = [scalar_coeffs, scalar_offsets](
                           double t, const std::vector<double>&, int y) {
      return (*scalar_coeffs)[static_cast<size_t>(y)] * t +
             (*scalar_offsets)[static_cast<size_t>(y)];
    };
  }

  inst.w.resize(static_cast<size_t>(inst.problem.dim));
  for (double& v : inst.w) v = rng.next_gaussian() * 0.3;
  inst.x.resize(static_cast<size_t>(dim));
  for (double& v : inst.x) v = rng.next_gaussian();
  double n2 = 0.0;
  for (double v : inst.x) n2 += v * v;
  if (n2 > 1.0) {
    for (double& v : inst.x) v /= std::sqrt(n2);
  }
  inst.t = rng.next_gaussian();
  return inst;
}

}  // namespace

SuiteResult unbiased_suite(int trials, uint64_t seed) {
  SuiteResult suite;
  Rng rng(seed);
  int failures = 0;
  double worst = 0.0;

  for (int trial = 0; trial < trials; ++trial) {
    Rng trial_rng = rng.fork(fnv1a64("unbiased")).fork(static_cast<uint64_t>(trial));
    const int num_classes = 2 + static_cast<int>(trial_rng.next_below(5));
    const int dim = 1 + static_cast<int>(trial_rng.next_below(5));
    const bool softmax = trial % 2 == 0;
    const double eps = 0.1 + 3.9 * trial_rng.next_double();
    const PrivacyBudget budget{eps, 0.0};

    DebiasInstance inst = random_instance(num_classes, dim, softmax, trial_rng);

    // Support: either the full alphabet or the top-k of a random prior.
    std::vector<int> support;
    if (trial_rng.next_below(2) == 0) {
      for (int k = 0; k < num_classes; ++k) support.push_back(k);
    } else {
      int k = 1 + static_cast<int>(trial_rng.next_below(
                      static_cast<uint64_t>(num_classes)));
      support = top_k_labels(random_dirichlet_prior(num_classes, trial_rng), k);
    }
    const int y = support[trial_rng.next_below(support.size())];
    const auto row =
        conditional_row(y, support, num_classes, budget.epsilon);

    // Exhaustive expectation of the debiased gradient over the randomizer.
    std::vector<double> expected(static_cast<size_t>(inst.problem.dim), 0.0);
    for (int y_tilde : support) {
      std::vector<double> g = debiased_gradient(inst.problem, inst.w, inst.x,
                                                y_tilde, support, budget);
      const double q = row[static_cast<size_t>(y_tilde)];
      for (size_t i = 0; i < expected.size(); ++i) expected[i] += q * g[i];
    }
    std::vector<double> clean = inst.problem.gradient(inst.w, inst.x, y);
    for (size_t i = 0; i < expected.size(); ++i) {
      worst = std::max(worst, std::abs(expected[i] - clean[i]));
    }

    // Same for the debiased scalar loss.
    double expected_loss = 0.0;
    for (int y_tilde : support) {
      expected_loss +=
          row[static_cast<size_t>(y_tilde)] *
          debiased_loss(inst.scalar_loss, inst.t, inst.x, y_tilde, support, budget);
    }
    worst = std::max(
        worst, std::abs(expected_loss - inst.scalar_loss(inst.t, inst.x, y)));

    if (worst > 1e-10) {
      ++failures;
      break;
    }
  }

  CheckResult check;
  check.name = "debias unbiasedness trials=" + std::to_string(trials);
  check.pass = failures == 0 && worst <= 1e-10;
  check.detail = format("worst |bias| %.3g (tolerance 1e-10)", worst);
  suite.checks.push_back(std::move(check));
  return suite;
}

double empirical_dlaplace_tv(double scale, int64_t draws, Rng& rng) {
  std::map<int64_t, int64_t> counts;
  for (int64_t i = 0; i < draws; ++i) {
    ++counts[discrete_laplace(scale, rng)];
  }
  const int64_t lo = counts.begin()->first;
  const int64_t hi = counts.rbegin()->first;
  double l1 = 0.0;
  double covered = 0.0;
  for (int64_t z = lo; z <= hi; ++z) {
    double analytic = discrete_laplace_pmf(scale, z);
    auto it = counts.find(z);
    double empirical =
        it == counts.end()
            ? 0.0
            : static_cast<double>(it->second) / static_cast<double>(draws);
    l1 += std::abs(empirical - analytic);
    covered += analytic;
  }
  l1 += std::max(0.0, 1.0 - covered);  // analytic mass outside observed range
  return 0.5 * l1;
}

double histogram_neighbor_ratio(double eps_p, int window) {
  const double a = eps_p / 2.0;
  // Two histograms of 5 examples over K = 3 bins differing in one label:
  // (2, 2, 1) vs (2, 3, 0).
  const int h1[3] = {2, 2, 1};
  const int h2[3] = {2, 3, 0};
  double worst = 0.0;
  for (int b0 = -window; b0 <= window + 2; ++b0) {
    for (int b1 = -window; b1 <= window + 3; ++b1) {
      for (int b2 = -window; b2 <= window + 1; ++b2) {
        const int out[3] = {b0, b1, b2};
        double p1 = 1.0;
        double p2 = 1.0;
        for (int k = 0; k < 3; ++k) {
          p1 *= discrete_laplace_pmf(a, out[k] - h1[k]);
          p2 *= discrete_laplace_pmf(a, out[k] - h2[k]);
        }
        worst = std::max(worst, p1 / p2);
      }
    }
  }
  return worst;
}

// Expected half-L1 distance between the empirical histogram of n draws and
// the true pmf: the binomial fluctuation summed over the support. A correct
// sampler lands near this floor; a broken one lands well above it.
static double dlaplace_tv_noise_floor(double scale, int64_t draws) {
  double sum = 0.0;
  const int64_t reach = static_cast<int64_t>(std::ceil(45.0 / scale));
  for (int64_t z = -reach; z <= reach; ++z) {
    double p = discrete_laplace_pmf(scale, z);
    sum += std::sqrt(p * (1.0 - p));
  }
  const double kRootTwoOverPi = 0.7978845608028654;
  return 0.5 * kRootTwoOverPi / std::sqrt(static_cast<double>(draws)) * sum;
}

SuiteResult dlaplace_suite(const std::vector<double>& scales, int64_t draws,
                           double tv_threshold, uint64_t seed) {
  SuiteResult suite;
  Rng rng(seed);
  for (double a : scales) {
    Rng draw_rng = rng.fork(fnv1a64("dlaplace")).fork(static_cast<uint64_t>(a * 1e9));
    double tv = empirical_dlaplace_tv(a, draws, draw_rng);
    CheckResult check;
    check.name = format("dlaplace fidelity a=%g", a);
    check.pass = tv < tv_threshold;
    check.detail = format("TV %.5f vs threshold %.5f", tv, tv_threshold) +
                   format(" (sampling-noise floor ~%.5f)",
                          dlaplace_tv_noise_floor(a, draws));
    suite.checks.push_back(std::move(check));
  }

  const double eps_p = 1.0;
  double ratio = histogram_neighbor_ratio(eps_p, 12);
  CheckResult check;
  check.name = "histogram query DP ratio (K=3, 5 examples)";
  const double bound = std::exp(eps_p);
  check.pass = ratio <= bound * (1.0 + 1e-9) && ratio >= bound * (1.0 - 1e-6);
  check.detail = format("max ratio %.9f vs e^eps_p %.9f", ratio, bound);
  suite.checks.push_back(std::move(check));
  return suite;
}

}  // namespace labelrand::verify
