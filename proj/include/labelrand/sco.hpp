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
// Label-private stochastic convex optimization. Two single-pass algorithms:
// one randomizes each label once and debiases the gradient so its
// expectation over the randomizer equals the clean-label gradient, the other
// adds Gaussian noise confined to the span of the per-label gradients.
// Includes a synthetic linear problem with a closed-form minimizer and a
// Gaussian-blob generator used as a desk-scale benchmark fixture.

#ifndef LABELRAND_SCO_HPP_
#define LABELRAND_SCO_HPP_

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/rng.hpp"

namespace labelrand {

// A convex loss family over a Euclidean ball of the given diameter centered
// at the origin. `loss` must be convex and `lipschitz`-Lipschitz in w for
// every example; `sample` draws one (x, y) from the data distribution.
struct ScoProblem {
  int dim = 0;           // parameter dimension
  double diameter = 0.0;
  double lipschitz = 0.0;
  LabelSpace labels{2};
  std::function<double(const std::vector<double>& w,
                       const std::vector<double>& x, int y)>
      loss;
  std::function<std::vector<double>(const std::vector<double>& w,
                                    const std::vector<double>& x, int y)>
      gradient;
  std::function<std::pair<std::vector<double>, int>(Rng&)> sample;
};

// Construction-time validation pass: checks the Lipschitz bound on random
// probe pairs inside the ball and the gradient against central finite
// differences (1e-5 relative). Never called on the optimization hot path.
void validate_problem(const ScoProblem& problem, Rng& rng, int probes = 32);

// Constants of the affine debias correction for a support of size k:
// p_k_eps = 1/(e^eps + k - 1) and scale = (e^eps + k - 1)/(e^eps - 1).
struct DebiasCoefficients {
  double scale = 0.0;
  double p_k_eps = 0.0;
  int support_size = 0;

  static DebiasCoefficients compute(double epsilon, int support_size);
};

// eta(t) = D / (G sqrt(t)), t >= 1.
struct StepSchedule {
  double diameter = 1.0;
  double gradient_moment = 1.0;

  double eta(int t) const {
    return diameter / (gradient_moment * std::sqrt(static_cast<double>(t)));
  }

  // G = 6KL/eps, the moment bound of the debiased gradient.
  static StepSchedule for_rr_sgd(double diameter, int num_labels,
                                 double lipschitz, double epsilon);
  // G = sqrt(L^2 + K sigma^2).
  static StepSchedule for_normal_sgd(double diameter, double lipschitz,
                                     int num_labels, double sigma);
};

// Unbiased gradient estimate from a randomized label drawn over `support`:
//   g_hat = scale * (grad(w,(x,y_tilde)) - p_k_eps * sum_{k in support} grad(w,(x,k))).
// y_tilde must be a member of the support.
std::vector<double> debiased_gradient(const ScoProblem& problem,
                                      const std::vector<double>& w,
                                      const std::vector<double>& x, int y_tilde,
                                      const std::vector<int>& support,
                                      PrivacyBudget budget);

using ScalarLoss =
    std::function<double(double t, const std::vector<double>& x, int y)>;

// Debiased scalar loss:
//   (loss(t,(x,y)) - p_k_eps * sum_{y' in support} loss(t,(x,y'))) / (1 - k p_k_eps).
// Its expectation over a randomized label drawn over the support equals the
// clean loss whenever y is a member. epsilon = 0 makes the denominator
// vanish and is rejected.
double debiased_loss(const ScalarLoss& loss, double t,
                     const std::vector<double>& x, int y,
                     const std::vector<int>& support, PrivacyBudget budget);

// Optional per-x prior: returns (prior, k); labels are randomized over the
// top-k set of the prior, with out-of-set labels remapped uniformly into it.
using PriorMap =
    std::function<std::pair<Prior, int>(const std::vector<double>& x)>;

struct RrSgdOptions {
  int num_samples = 0;
  PrivacyBudget budget;
  StepSchedule schedule;
  PriorMap prior_map;  // empty: classic randomized response over [K]
};

// Single pass of projected SGD on debiased gradients; each sample's label is
// randomized exactly once. Returns the final iterate (no averaging).
// epsilon must be positive; values above 1 are outside the analyzed regime
// and produce a warning on stderr.
std::vector<double> label_rr_sgd(const ScoProblem& problem,
                                 const RrSgdOptions& options, Rng& rng);

// sigma = 2 L sqrt(2 ln(1.25/delta)) / eps, the Gaussian mechanism
// calibration for sensitivity 2L (the per-label gradient diameter).
double gaussian_noise_sigma(double lipschitz, double epsilon, double delta);

using NoiseObserver = std::function<void(
    int t, const std::vector<double>& x, int y, const std::vector<double>& noise)>;

struct NormalSgdOptions {
  int num_samples = 0;
  PrivacyBudget budget;  // epsilon, delta both in (0, 1)
  StepSchedule schedule;
  std::optional<double> sigma_override;  // test-only; skips the (eps, delta) gate
  NoiseObserver observer;
};

struct NormalSgdResult {
  std::vector<double> w;
  double sigma = 0.0;
  double mean_noise_norm_sq = 0.0;  // average ||b_t||^2 over the pass
};

// Single pass of projected SGD on clean-label gradients plus Gaussian noise
// projected onto the span of the K per-label gradients at each step.
NormalSgdResult label_normal_sgd(const ScoProblem& problem,
                                 const NormalSgdOptions& options, Rng& rng);

// Modified Gram-Schmidt; directions whose residual norm falls at or below
// tol * max(1, ||v||) are dropped.
std::vector<std::vector<double>> orthonormal_basis(
    const std::vector<std::vector<double>>& vectors, double tol = 1e-10);

std::vector<double> project_onto_span(
    const std::vector<std::vector<double>>& basis, const std::vector<double>& v);

// Linear two-label problem over basis vectors: x_i = e_i in dimension n,
// loss +L<w,x> for label 0 and -L<w,x> for label 1, parameter ball of
// diameter D. The population is uniform over the n fixed points, so the
// population risk is available in closed form, with minimum -DL/(2 sqrt(n)).
struct LowerBoundProblem {
  ScoProblem problem;
  std::vector<int> dataset_labels;
  double optimal_risk = 0.0;

  double population_risk(const std::vector<double>& w) const;
  double excess_risk(const std::vector<double>& w) const {
    return population_risk(w) - optimal_risk;
  }
};

LowerBoundProblem make_lower_bound_problem(int n, double diameter,
                                           double lipschitz, Rng& rng);

// K spherical Gaussian clusters with unit covariance and means at mutual
// distance `separation` (scaled basis vectors; requires dim >= K when the
// separation is positive). Labels are cluster indices.
struct BlobDataset {
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  std::vector<std::vector<double>> means;
};

BlobDataset make_blob_problem(int n, int num_classes, int dim,
                              double separation, Rng& rng);

// Softmax cross-entropy on the blob distribution, parameters flattened to
// K*dim; sampled inputs are clipped to a ball so the loss stays Lipschitz.
ScoProblem make_softmax_blob_problem(int num_classes, int dim,
                                     double separation, uint64_t sampler_salt);

}  // namespace labelrand

#endif  // LABELRAND_SCO_HPP_
