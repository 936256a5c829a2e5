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
// Per-example prior construction: uniform priors, temperature-scaled softmax
// of model logits, and cluster-histogram priors built by grouping externally
// supplied feature vectors with k-means and querying each group's label
// histogram through the discrete Laplace mechanism. Feature extraction is
// out of scope; features arrive as a matrix.

#ifndef LABELRAND_PRIORS_HPP_
#define LABELRAND_PRIORS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/rng.hpp"

namespace labelrand {

// One feature row per example; all rows share dimension d >= 1, ids unique.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;

  size_t size() const { return rows.size(); }
  size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }
};

void validate(const FeatureMatrix& features);

struct Clustering {
  std::vector<int> assignment;                 // one cluster index per row
  std::vector<std::vector<double>> centroids;  // C centroids of dimension d
  std::vector<double> distortion_history;      // per Lloyd iteration
};

// Softmax temperature; t -> 0 sharpens the prior, t -> infinity flattens it
// toward uniform.
struct Temperature {
  double value = 1.0;
};

void validate(const Temperature& temp);

// Post-noise per-cluster histogram and the prior derived from it by
// clip-at-zero and normalization (uniform fallback when everything clips).
struct NoisyHistogram {
  std::vector<int64_t> counts;
  Prior prior;
};

std::vector<Prior> uniform_priors(size_t n, LabelSpace space);

// softmax(logits / t), numerically stabilized by subtracting the max logit.
Prior temperature_scale(const std::vector<double>& logits, Temperature temp);

// Lloyd's algorithm with k-means++ seeding. Stops when assignments are
// unchanged or after max_iters; empty clusters are re-seeded to the point
// farthest from its current centroid.
Clustering kmeans(const FeatureMatrix& features, int num_clusters, Rng& rng,
                  int max_iters = 100);

// Two-sided geometric noise: Pr[Z = z] = tanh(a/2) * e^{-a|z|}, a > 0.
// Sampled as the difference of two geometric variables.
int64_t discrete_laplace(double a, Rng& rng);

double discrete_laplace_pmf(double a, int64_t z);

struct ClusterPriorsResult {
  std::vector<Prior> priors;  // one per example, aligned with features
  PrivacyBudget spent;
  Clustering clustering;
  std::vector<NoisyHistogram> histograms;  // one per cluster
};

// Clusters the features, queries each cluster's label histogram with
// independent discrete_laplace(eps_prior/2) noise per bin, clips at zero and
// normalizes, then assigns each example its cluster's prior. One label
// substitution moves two bins by 1 each (L1 sensitivity 2), so noise scale
// eps_prior/2 per bin makes the whole query eps_prior-LabelDP; the clusters
// partition the examples, so the budget is spent once, not per cluster.
ClusterPriorsResult cluster_histogram_priors(const FeatureMatrix& features,
                                             const std::vector<int>& labels,
                                             LabelSpace space, int num_clusters,
                                             PrivacyBudget eps_prior,
                                             const Rng& rng);

}  // namespace labelrand

#endif  // LABELRAND_PRIORS_HPP_
