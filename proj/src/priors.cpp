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
#include "labelrand/priors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace labelrand {

namespace {

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    d2 += diff * diff;
  }
  return d2;
}

}  // namespace

void validate(const FeatureMatrix& features) {
  if (features.ids.size() != features.rows.size()) {
    throw InputError("FeatureMatrix: ids and rows misaligned");
  }
  if (!features.rows.empty() && features.rows.front().empty()) {
    throw InputError("FeatureMatrix: feature dimension must be >= 1");
  }
  for (const auto& row : features.rows) {
    if (row.size() != features.dim()) {
      throw InputError("FeatureMatrix: rows of unequal dimension");
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : features.ids) {
    if (!seen.insert(id).second) {
      throw InputError("FeatureMatrix: duplicate id '" + id + "'");
    }
  }
}

void validate(const Temperature& temp) {
  if (!(temp.value > 0.0) || !std::isfinite(temp.value)) {
    throw InputError("Temperature: t must be finite and > 0");
  }
}

std::vector<Prior> uniform_priors(size_t n, LabelSpace space) {
  validate(space);
  return std::vector<Prior>(n, Prior::uniform(space.num_classes));
}

Prior temperature_scale(const std::vector<double>& logits, Temperature temp) {
  validate(temp);
  if (logits.size() < 2) {
    throw InputError("temperature_scale: need at least 2 logits");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw InputError("temperature_scale: non-finite logit");
    }
    max_logit = std::max(max_logit, v);
  }
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - max_logit) / temp.value);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return Prior(std::move(probs));
}

Clustering kmeans(const FeatureMatrix& features, int num_clusters, Rng& rng,
                  int max_iters) {
  validate(features);
  const size_t n = features.size();
  if (num_clusters < 1 || static_cast<size_t>(num_clusters) > n) {
    throw InputError("kmeans: cluster count must lie in [1, n]");
  }

  const auto& rows = features.rows;
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<size_t>(num_clusters));

  // k-means++ seeding.
  centroids.push_back(rows[rng.next_below(n)]);
  std::vector<double> d2(n);
  for (int c = 1; c < num_clusters; ++c) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = squared_distance(rows[i], centroids[0]);
      for (size_t j = 1; j < centroids.size(); ++j) {
        best = std::min(best, squared_distance(rows[i], centroids[j]));
      }
      d2[i] = best;
      total += best;
    }
    size_t pick;
    if (total <= 0.0) {
      pick = rng.next_below(n);
    } else {
      double u = rng.next_double() * total;
      double acc = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(rows[pick]);
  }

  Clustering result;
  result.assignment.assign(n, 0);
  const size_t dim = features.dim();

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double distortion = 0.0;
    for (size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = squared_distance(rows[i], centroids[0]);
      for (int c = 1; c < num_clusters; ++c) {
        double d = squared_distance(rows[i], centroids[static_cast<size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      distortion += best_d;
      if (result.assignment[i] != best_c) {
        result.assignment[i] = best_c;
        changed = true;
      }
    }
    result.distortion_history.push_back(distortion);
    if (!changed && iter > 0) break;

    std::vector<std::vector<double>> sums(
        static_cast<size_t>(num_clusters), std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(static_cast<size_t>(num_clusters), 0);
    for (size_t i = 0; i < n; ++i) {
      auto& sum = sums[static_cast<size_t>(result.assignment[i])];
      for (size_t j = 0; j < dim; ++j) sum[j] += rows[i][j];
      ++counts[static_cast<size_t>(result.assignment[i])];
    }
    for (int c = 0; c < num_clusters; ++c) {
      if (counts[static_cast<size_t>(c)] == 0) {
        // Re-seed an emptied cluster to the point farthest from its centroid.
        size_t farthest = 0;
        double best = -1.0;
        for (size_t i = 0; i < n; ++i) {
          double d = squared_distance(
              rows[i],
              centroids[static_cast<size_t>(result.assignment[i])]);
          if (d > best) {
            best = d;
            farthest = i;
          }
        }
        centroids[static_cast<size_t>(c)] = rows[farthest];
      } else {
        auto& centroid = centroids[static_cast<size_t>(c)];
        const double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
        for (size_t j = 0; j < dim; ++j) {
          centroid[j] = sums[static_cast<size_t>(c)][j] * inv;
        }
      }
    }
  }

  result.centroids = std::move(centroids);
  return result;
}

int64_t discrete_laplace(double a, Rng& rng) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InputError("discrete_laplace: scale a must be finite and > 0");
  }
  auto geometric = [&rng, a]() {
    // Failures before first success at rate 1 - e^{-a}.
    double u = rng.next_open_double();
    return static_cast<int64_t>(std::floor(std::log(u) / -a));
  };
  return geometric() - geometric();
}

double discrete_laplace_pmf(double a, int64_t z) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InputError("discrete_laplace_pmf: scale a must be finite and > 0");
  }
  return std::tanh(a / 2.0) * std::exp(-a * static_cast<double>(std::llabs(z)));
}

ClusterPriorsResult cluster_histogram_priors(const FeatureMatrix& features,
                                             const std::vector<int>& labels,
                                             LabelSpace space, int num_clusters,
                                             PrivacyBudget eps_prior,
                                             const Rng& rng) {
  validate(features);
  validate(space);
  require_pure(eps_prior);
  if (!(eps_prior.epsilon > 0.0)) {
    throw InputError("cluster_histogram_priors: eps_prior must be > 0");
  }
  if (labels.size() != features.size()) {
    throw InputError("cluster_histogram_priors: labels misaligned with features");
  }
  for (int y : labels) {
    if (y < 0 || y >= space.num_classes) {
      throw InputError("cluster_histogram_priors: label outside alphabet");
    }
  }

  Rng kmeans_rng = rng.fork("kmeans");
  Clustering clustering = kmeans(features, num_clusters, kmeans_rng);

  const size_t num_bins = static_cast<size_t>(space.num_classes);
  std::vector<std::vector<int64_t>> counts(
      static_cast<size_t>(num_clusters), std::vector<int64_t>(num_bins, 0));
  for (size_t i = 0; i < labels.size(); ++i) {
    ++counts[static_cast<size_t>(clustering.assignment[i])]
            [static_cast<size_t>(labels[i])];
  }

  ClusterPriorsResult result;
  result.spent = eps_prior;
  result.histograms.reserve(static_cast<size_t>(num_clusters));
  const double noise_scale = eps_prior.epsilon / 2.0;
  for (int c = 0; c < num_clusters; ++c) {
    Rng noise_rng = rng.fork("histogram-noise").fork(static_cast<uint64_t>(c));
    NoisyHistogram hist{std::vector<int64_t>(num_bins, 0),
                        Prior::uniform(space.num_classes)};
    double total = 0.0;
    std::vector<double> clipped(num_bins, 0.0);
    for (size_t k = 0; k < num_bins; ++k) {
      int64_t noisy = counts[static_cast<size_t>(c)][k] +
                      discrete_laplace(noise_scale, noise_rng);
      hist.counts[k] = noisy;
      clipped[k] = std::max<double>(static_cast<double>(noisy), 0.0);
      total += clipped[k];
    }
    if (total > 0.0) {
      for (double& v : clipped) v /= total;
      hist.prior = Prior(std::move(clipped));
    }
    result.histograms.push_back(std::move(hist));
  }

  result.priors.reserve(features.size());
  for (size_t i = 0; i < features.size(); ++i) {
    result.priors.push_back(
        result.histograms[static_cast<size_t>(clustering.assignment[i])].prior);
  }
  result.clustering = std::move(clustering);
  return result;
}

}  // namespace labelrand
