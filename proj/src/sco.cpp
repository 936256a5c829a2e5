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
#include "labelrand/sco.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <numeric>

#include "labelrand/mechanisms.hpp"

namespace labelrand {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

// Projects w onto the ball of the given radius; rejects non-finite iterates.
void project_to_ball(std::vector<double>& w, double radius) {
  double n2 = 0.0;
  for (double v : w) n2 += v * v;
  if (!std::isfinite(n2)) {
    throw DivergenceError("sgd iterate became non-finite");
  }
  if (n2 > radius * radius) {
    double scale = radius / std::sqrt(n2);
    for (double& v : w) v *= scale;
  }
}

std::vector<double> random_point_in_ball(int dim, double radius, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(dim));
  for (double& c : v) c = rng.next_gaussian();
  double n = norm(v);
  if (n == 0.0) return v;
  double r = radius * std::cbrt(rng.next_double());
  for (double& c : v) c *= r / n;
  return v;
}

void check_support(const std::vector<int>& support, int num_classes) {
  if (support.empty() || support.size() > static_cast<size_t>(num_classes)) {
    throw InputError("support must be a nonempty subset of the alphabet");
  }
  for (int k : support) {
    if (k < 0 || k >= num_classes) {
      throw InputError("support contains label outside the alphabet");
    }
  }
}

}  // namespace

void validate_problem(const ScoProblem& problem, Rng& rng, int probes) {
  if (problem.dim < 1 || !(problem.diameter > 0.0) ||
      !(problem.lipschitz > 0.0)) {
    throw InputError("ScoProblem: need dim >= 1, diameter > 0, lipschitz > 0");
  }
  validate(problem.labels);
  if (!problem.loss || !problem.gradient || !problem.sample) {
    throw InputError("ScoProblem: loss, gradient, and sample are required");
  }
  const double radius = problem.diameter / 2.0;
  for (int probe = 0; probe < probes; ++probe) {
    auto [x, y] = problem.sample(rng);
    std::vector<double> w1 = random_point_in_ball(problem.dim, radius, rng);
    std::vector<double> w2 = random_point_in_ball(problem.dim, radius, rng);

    double l1 = problem.loss(w1, x, y);
    double l2 = problem.loss(w2, x, y);
    std::vector<double> diff(w1.size());
    for (size_t i = 0; i < w1.size(); ++i) diff[i] = w1[i] - w2[i];
    double bound = problem.lipschitz * norm(diff);
    if (std::abs(l1 - l2) > bound * (1.0 + 1e-9) + 1e-12) {
      throw InputError("ScoProblem: Lipschitz bound violated on probe pair");
    }

    std::vector<double> grad = problem.gradient(w1, x, y);
    if (grad.size() != static_cast<size_t>(problem.dim)) {
      throw InputError("ScoProblem: gradient dimension mismatch");
    }
    const double h = 1e-5;
    size_t coords = std::min<size_t>(grad.size(), 8);
    for (size_t probe_coord = 0; probe_coord < coords; ++probe_coord) {
      size_t i = (grad.size() <= 8)
                     ? probe_coord
                     : static_cast<size_t>(rng.next_below(grad.size()));
      std::vector<double> wp = w1;
      std::vector<double> wm = w1;
      wp[i] += h;
      wm[i] -= h;
      double fd = (problem.loss(wp, x, y) - problem.loss(wm, x, y)) / (2.0 * h);
      if (std::abs(fd - grad[i]) > 1e-5 * std::max(1.0, std::abs(grad[i]))) {
        throw InputError("ScoProblem: gradient disagrees with finite differences");
      }
    }
  }
}

DebiasCoefficients DebiasCoefficients::compute(double epsilon, int support_size) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("debias: epsilon must be finite and > 0");
  }
  if (support_size < 1) {
    throw InputError("debias: support size must be >= 1");
  }
  const double e = std::exp(epsilon);
  if (!std::isfinite(e)) {
    throw InputError("debias: epsilon overflows e^epsilon");
  }
  DebiasCoefficients c;
  c.support_size = support_size;
  c.p_k_eps = 1.0 / (e + static_cast<double>(support_size) - 1.0);
  c.scale = (e + static_cast<double>(support_size) - 1.0) / (e - 1.0);
  return c;
}

StepSchedule StepSchedule::for_rr_sgd(double diameter, int num_labels,
                                      double lipschitz, double epsilon) {
  return {diameter, 6.0 * num_labels * lipschitz / epsilon};
}

StepSchedule StepSchedule::for_normal_sgd(double diameter, double lipschitz,
                                          int num_labels, double sigma) {
  return {diameter,
          std::sqrt(lipschitz * lipschitz + num_labels * sigma * sigma)};
}

std::vector<double> debiased_gradient(const ScoProblem& problem,
                                      const std::vector<double>& w,
                                      const std::vector<double>& x, int y_tilde,
                                      const std::vector<int>& support,
                                      PrivacyBudget budget) {
  require_pure(budget);
  check_support(support, problem.labels.num_classes);
  if (std::find(support.begin(), support.end(), y_tilde) == support.end()) {
    throw InputError("debiased_gradient: randomized label outside support");
  }
  const DebiasCoefficients c = DebiasCoefficients::compute(
      budget.epsilon, static_cast<int>(support.size()));

  std::vector<double> result = problem.gradient(w, x, y_tilde);
  std::vector<double> correction(result.size(), 0.0);
  for (int k : support) {
    std::vector<double> g = problem.gradient(w, x, k);
    for (size_t i = 0; i < correction.size(); ++i) correction[i] += g[i];
  }
  for (size_t i = 0; i < result.size(); ++i) {
    result[i] = c.scale * (result[i] - c.p_k_eps * correction[i]);
  }
  return result;
}

double debiased_loss(const ScalarLoss& loss, double t,
                     const std::vector<double>& x, int y,
                     const std::vector<int>& support, PrivacyBudget budget) {
  require_pure(budget);
  if (support.empty()) throw InputError("debiased_loss: empty support");
  const int k = static_cast<int>(support.size());
  const DebiasCoefficients c = DebiasCoefficients::compute(budget.epsilon, k);
  const double denom = 1.0 - k * c.p_k_eps;
  if (!(denom > 0.0)) {
    throw InputError("debiased_loss: degenerate privacy (k * p_k_eps >= 1)");
  }
  double correction = 0.0;
  for (int label : support) correction += loss(t, x, label);
  return (loss(t, x, y) - c.p_k_eps * correction) / denom;
}

std::vector<double> label_rr_sgd(const ScoProblem& problem,
                                 const RrSgdOptions& options, Rng& rng) {
  require_pure(options.budget);
  if (!(options.budget.epsilon > 0.0)) {
    throw InputError("label_rr_sgd: epsilon must be > 0");
  }
  if (options.budget.epsilon > 1.0) {
    std::fprintf(stderr,
                 "labelrand: warning: label_rr_sgd called with eps=%g; the "
                 "utility analysis assumes eps in (0, 1]\n",
                 options.budget.epsilon);
  }
  if (options.num_samples < 0) {
    throw InputError("label_rr_sgd: num_samples must be >= 0");
  }

  Rng sample_rng = rng.fork("samples");
  Rng mech_rng = rng.fork("mechanism");

  const int num_classes = problem.labels.num_classes;
  std::vector<int> alphabet(static_cast<size_t>(num_classes));
  std::iota(alphabet.begin(), alphabet.end(), 0);

  const double radius = problem.diameter / 2.0;
  std::vector<double> w(static_cast<size_t>(problem.dim), 0.0);

  for (int t = 1; t <= options.num_samples; ++t) {
    auto [x, y] = problem.sample(sample_rng);
    std::vector<int> support;
    const std::vector<int>* support_ptr = &alphabet;
    if (options.prior_map) {
      auto [prior, k] = options.prior_map(x);
      support = top_k_labels(prior, k);
      support_ptr = &support;
    }
    // The one randomization this sample's label ever sees. Labels outside
    // the support take the uniform branch, which matches remapping them
    // uniformly into the support before randomizing.
    int y_tilde =
        rr_over_support(y, *support_ptr, num_classes, options.budget, mech_rng);
    std::vector<double> g =
        debiased_gradient(problem, w, x, y_tilde, *support_ptr, options.budget);
    const double eta = options.schedule.eta(t);
    for (size_t i = 0; i < w.size(); ++i) w[i] -= eta * g[i];
    project_to_ball(w, radius);
  }
  return w;
}

double gaussian_noise_sigma(double lipschitz, double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw InputError("gaussian_noise_sigma: need epsilon, delta in (0, 1)");
  }
  return 2.0 * lipschitz * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

std::vector<std::vector<double>> orthonormal_basis(
    const std::vector<std::vector<double>>& vectors, double tol) {
  std::vector<std::vector<double>> basis;
  for (const auto& v : vectors) {
    std::vector<double> u = v;
    for (const auto& q : basis) {
      double c = dot(u, q);
      for (size_t i = 0; i < u.size(); ++i) u[i] -= c * q[i];
    }
    // Second pass for numerical stability.
    for (const auto& q : basis) {
      double c = dot(u, q);
      for (size_t i = 0; i < u.size(); ++i) u[i] -= c * q[i];
    }
    double n = norm(u);
    if (n <= tol * std::max(1.0, norm(v))) continue;
    for (double& c : u) c /= n;
    basis.push_back(std::move(u));
  }
  return basis;
}

std::vector<double> project_onto_span(
    const std::vector<std::vector<double>>& basis,
    const std::vector<double>& v) {
  std::vector<double> result(v.size(), 0.0);
  for (const auto& q : basis) {
    double c = dot(v, q);
    for (size_t i = 0; i < v.size(); ++i) result[i] += c * q[i];
  }
  return result;
}

NormalSgdResult label_normal_sgd(const ScoProblem& problem,
                                 const NormalSgdOptions& options, Rng& rng) {
  double sigma;
  if (options.sigma_override.has_value()) {
    sigma = *options.sigma_override;
    if (sigma < 0.0) throw InputError("label_normal_sgd: sigma must be >= 0");
  } else {
    sigma = gaussian_noise_sigma(problem.lipschitz, options.budget.epsilon,
                                 options.budget.delta);
  }
  if (options.num_samples < 0) {
    throw InputError("label_normal_sgd: num_samples must be >= 0");
  }

  Rng sample_rng = rng.fork("samples");
  Rng noise_rng = rng.fork("noise");

  const int num_classes = problem.labels.num_classes;
  const double radius = problem.diameter / 2.0;
  NormalSgdResult result;
  result.sigma = sigma;
  result.w.assign(static_cast<size_t>(problem.dim), 0.0);
  double noise_sq_sum = 0.0;

  for (int t = 1; t <= options.num_samples; ++t) {
    auto [x, y] = problem.sample(sample_rng);

    std::vector<std::vector<double>> per_label;
    per_label.reserve(static_cast<size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
      per_label.push_back(problem.gradient(result.w, x, k));
    }
    std::vector<std::vector<double>> basis = orthonormal_basis(per_label);

    std::vector<double> noise(static_cast<size_t>(problem.dim), 0.0);
    if (sigma > 0.0) {
      for (double& c : noise) c = sigma * noise_rng.next_gaussian();
      noise = project_onto_span(basis, noise);
    }
    noise_sq_sum += dot(noise, noise);
    if (options.observer) options.observer(t, x, y, noise);

    const double eta = options.schedule.eta(t);
    const auto& g = per_label[static_cast<size_t>(y)];
    for (size_t i = 0; i < result.w.size(); ++i) {
      result.w[i] -= eta * (g[i] + noise[i]);
    }
    project_to_ball(result.w, radius);
  }
  if (options.num_samples > 0) {
    result.mean_noise_norm_sq = noise_sq_sum / options.num_samples;
  }
  return result;
}

double LowerBoundProblem::population_risk(const std::vector<double>& w) const {
  const double n = static_cast<double>(dataset_labels.size());
  double risk = 0.0;
  for (size_t i = 0; i < dataset_labels.size(); ++i) {
    double sign = (dataset_labels[i] == 0) ? 1.0 : -1.0;
    risk += sign * problem.lipschitz * w[i];
  }
  return risk / n;
}

LowerBoundProblem make_lower_bound_problem(int n, double diameter,
                                           double lipschitz, Rng& rng) {
  if (n < 1) throw InputError("make_lower_bound_problem: n must be >= 1");
  if (!(diameter > 0.0) || !(lipschitz > 0.0)) {
    throw InputError("make_lower_bound_problem: need diameter, lipschitz > 0");
  }

  auto labels = std::make_shared<std::vector<int>>();
  labels->reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    labels->push_back(static_cast<int>(rng.next_below(2)));
  }

  LowerBoundProblem lb;
  lb.dataset_labels = *labels;
  lb.optimal_risk = -diameter * lipschitz / (2.0 * std::sqrt(static_cast<double>(n)));

  const double L = lipschitz;
  lb.problem.dim = n;
  lb.problem.diameter = diameter;
  lb.problem.lipschitz = lipschitz;
  lb.problem.labels = LabelSpace{2};
  lb.problem.loss = [L](const std::vector<double>& w,
                        const std::vector<double>& x, int y) {
    double inner = 0.0;
    for (size_t i = 0; i < w.size(); ++i) inner += w[i] * x[i];
    return (y == 0 ? L : -L) * inner;
  };
  lb.problem.gradient = [L](const std::vector<double>& w,
                            const std::vector<double>& x, int y) {
    std::vector<double> g(w.size());
    const double c = (y == 0 ? L : -L);
    for (size_t i = 0; i < g.size(); ++i) g[i] = c * x[i];
    return g;
  };
  const int dim = n;
  lb.problem.sample = [labels, dim](Rng& r) {
    size_t i = static_cast<size_t>(r.next_below(static_cast<uint64_t>(dim)));
    std::vector<double> x(static_cast<size_t>(dim), 0.0);
    x[i] = 1.0;
    return std::make_pair(std::move(x), (*labels)[i]);
  };

  Rng check_rng = rng.fork("validate");
  validate_problem(lb.problem, check_rng, 8);
  return lb;
}

namespace {

std::vector<std::vector<double>> blob_means(int num_classes, int dim,
                                            double separation) {
  if (separation < 0.0) {
    throw InputError("make_blob_problem: separation must be >= 0");
  }
  std::vector<std::vector<double>> means(
      static_cast<size_t>(num_classes),
      std::vector<double>(static_cast<size_t>(dim), 0.0));
  if (separation > 0.0) {
    if (dim < num_classes) {
      throw InputError(
          "make_blob_problem: positive separation needs dim >= num_classes");
    }
    // Scaled basis vectors are mutually separation apart.
    const double coord = separation / std::sqrt(2.0);
    for (int k = 0; k < num_classes; ++k) {
      means[static_cast<size_t>(k)][static_cast<size_t>(k)] = coord;
    }
  }
  return means;
}

}  // namespace

BlobDataset make_blob_problem(int n, int num_classes, int dim,
                              double separation, Rng& rng) {
  validate(LabelSpace{num_classes});
  if (n < 1 || dim < 1) {
    throw InputError("make_blob_problem: need n >= 1 and dim >= 1");
  }
  BlobDataset data;
  data.means = blob_means(num_classes, dim, separation);
  data.xs.reserve(static_cast<size_t>(n));
  data.ys.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int y = (n >= num_classes && i < num_classes)
                ? i  // guarantee every class appears when there is room
                : static_cast<int>(rng.next_below(static_cast<uint64_t>(num_classes)));
    std::vector<double> x = data.means[static_cast<size_t>(y)];
    for (double& c : x) c += rng.next_gaussian();
    data.xs.push_back(std::move(x));
    data.ys.push_back(y);
  }
  return data;
}

ScoProblem make_softmax_blob_problem(int num_classes, int dim,
                                     double separation, uint64_t sampler_salt) {
  validate(LabelSpace{num_classes});
  if (dim < 1) throw InputError("make_softmax_blob_problem: dim must be >= 1");
  auto means = std::make_shared<std::vector<std::vector<double>>>(
      blob_means(num_classes, dim, separation));

  // Inputs are clipped to this radius so the loss is Lipschitz; the clip is
  // rarely active at desk-scale separations.
  const double input_radius = separation + 6.0 * std::sqrt(static_cast<double>(dim));

  ScoProblem p;
  p.dim = num_classes * dim;
  p.diameter = 2.0;
  p.lipschitz = std::sqrt(2.0) * input_radius;
  p.labels = LabelSpace{num_classes};

  auto logits_of = [num_classes, dim](const std::vector<double>& w,
                                      const std::vector<double>& x) {
    std::vector<double> logits(static_cast<size_t>(num_classes), 0.0);
    for (int k = 0; k < num_classes; ++k) {
      const size_t off = static_cast<size_t>(k) * static_cast<size_t>(dim);
      double s = 0.0;
      for (int j = 0; j < dim; ++j) s += w[off + static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
      logits[static_cast<size_t>(k)] = s;
    }
    return logits;
  };

  p.loss = [logits_of](const std::vector<double>& w,
                       const std::vector<double>& x, int y) {
    std::vector<double> logits = logits_of(w, x);
    double m = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (double v : logits) lse += std::exp(v - m);
    return m + std::log(lse) - logits[static_cast<size_t>(y)];
  };
  const int d = dim;
  p.gradient = [logits_of, d](const std::vector<double>& w,
                              const std::vector<double>& x, int y) {
    std::vector<double> logits = logits_of(w, x);
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    std::vector<double> g(w.size());
    for (size_t k = 0; k < logits.size(); ++k) {
      double coeff = std::exp(logits[k] - m) / z - (static_cast<int>(k) == y ? 1.0 : 0.0);
      const size_t off = k * static_cast<size_t>(d);
      for (int j = 0; j < d; ++j) g[off + static_cast<size_t>(j)] = coeff * x[static_cast<size_t>(j)];
    }
    return g;
  };
  const int k_classes = num_classes;
  p.sample = [means, k_classes, input_radius](Rng& r) {
    int y = static_cast<int>(r.next_below(static_cast<uint64_t>(k_classes)));
    std::vector<double> x = (*means)[static_cast<size_t>(y)];
    for (double& c : x) c += r.next_gaussian();
    double n2 = 0.0;
    for (double c : x) n2 += c * c;
    if (n2 > input_radius * input_radius) {
      double scale = input_radius / std::sqrt(n2);
      for (double& c : x) c *= scale;
    }
    return std::make_pair(std::move(x), y);
  };

  Rng check_rng(sampler_salt ^ 0x5B10B5ULL);
  validate_problem(p, check_rng, 8);
  return p;
}

}  // namespace labelrand
