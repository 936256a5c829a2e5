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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "labelrand/priors.hpp"
#include "labelrand/verify.hpp"

using namespace labelrand;

namespace {

FeatureMatrix two_clouds(int per_cloud, double distance, Rng& rng) {
  FeatureMatrix features;
  for (int i = 0; i < 2 * per_cloud; ++i) {
    double center = (i < per_cloud) ? 0.0 : distance;
    features.ids.push_back("x" + std::to_string(i));
    features.rows.push_back({center + 0.01 * rng.next_gaussian(),
                             center + 0.01 * rng.next_gaussian()});
  }
  return features;
}

}  // namespace

TEST_CASE("uniform priors") {
  std::vector<Prior> priors = uniform_priors(3, LabelSpace{4});
  REQUIRE(priors.size() == 3);
  for (const auto& p : priors) {
    for (int k = 0; k < 4; ++k) CHECK(p.prob(k) == doctest::Approx(0.25));
  }
  CHECK(uniform_priors(0, LabelSpace{2}).empty());
}

TEST_CASE("temperature scaling matches the closed form") {
  Prior p = temperature_scale({1.0, 0.0}, Temperature{1.0});
  const double e = std::exp(1.0);
  CHECK(p.prob(0) == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(p.prob(1) == doctest::Approx(1 / (e + 1)).epsilon(1e-12));

  // Equal logits are uniform at any temperature.
  Prior sym = temperature_scale({0.0, 0.0}, Temperature{0.37});
  CHECK(sym.prob(0) == doctest::Approx(0.5));

  // Large t flattens toward uniform.
  Prior flat = temperature_scale({1.0, 0.0}, Temperature{1e9});
  CHECK(flat.prob(0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("temperature scaling is monotone in t") {
  const std::vector<double> logits{2.0, 0.5, -1.0};
  double previous_spread = 2.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    Prior p = temperature_scale(logits, Temperature{t});
    double spread = *std::max_element(p.probs().begin(), p.probs().end()) -
                    *std::min_element(p.probs().begin(), p.probs().end());
    CHECK(spread < previous_spread);
    previous_spread = spread;
  }
}

TEST_CASE("temperature scaling rejects bad input") {
  CHECK_THROWS_AS(temperature_scale({1.0, std::nan("")}, Temperature{1.0}),
                  InputError);
  CHECK_THROWS_AS(temperature_scale({1.0, 2.0}, Temperature{0.0}), InputError);
  CHECK_THROWS_AS(temperature_scale({1.0, 2.0}, Temperature{-1.0}), InputError);
}

TEST_CASE("kmeans separates well-separated clouds exactly") {
  Rng rng(7);
  FeatureMatrix features = two_clouds(50, 100.0, rng);
  Clustering clustering = kmeans(features, 2, rng);

  // Verify by exhaustive nearest-centroid check and cloud purity.
  int first_cloud_cluster = clustering.assignment[0];
  for (int i = 0; i < 50; ++i) CHECK(clustering.assignment[i] == first_cloud_cluster);
  for (int i = 50; i < 100; ++i) CHECK(clustering.assignment[i] != first_cloud_cluster);
  for (size_t i = 0; i < features.size(); ++i) {
    double d0 = 0.0;
    double d1 = 0.0;
    for (size_t j = 0; j < 2; ++j) {
      double a = features.rows[i][j] - clustering.centroids[0][j];
      double b = features.rows[i][j] - clustering.centroids[1][j];
      d0 += a * a;
      d1 += b * b;
    }
    int nearest = d0 <= d1 ? 0 : 1;
    CHECK(clustering.assignment[i] == nearest);
  }
}

TEST_CASE("kmeans with C=n gives zero distortion") {
  Rng rng(8);
  FeatureMatrix features;
  for (int i = 0; i < 6; ++i) {
    features.ids.push_back(std::to_string(i));
    features.rows.push_back({static_cast<double>(i), 0.0});
  }
  Clustering clustering = kmeans(features, 6, rng);
  CHECK(clustering.distortion_history.back() == doctest::Approx(0.0));
  std::vector<bool> used(6, false);
  for (int c : clustering.assignment) used[static_cast<size_t>(c)] = true;
  for (bool u : used) CHECK(u);
}

TEST_CASE("kmeans on identical points with one cluster") {
  Rng rng(9);
  FeatureMatrix features;
  for (int i = 0; i < 5; ++i) {
    features.ids.push_back(std::to_string(i));
    features.rows.push_back({3.0, -2.0});
  }
  Clustering clustering = kmeans(features, 1, rng);
  CHECK(clustering.centroids[0][0] == doctest::Approx(3.0));
  CHECK(clustering.centroids[0][1] == doctest::Approx(-2.0));
}

TEST_CASE("kmeans distortion never increases across iterations") {
  Rng rng(10);
  FeatureMatrix features;
  for (int i = 0; i < 200; ++i) {
    features.ids.push_back(std::to_string(i));
    features.rows.push_back({rng.next_gaussian(), rng.next_gaussian(),
                             rng.next_gaussian()});
  }
  Clustering clustering = kmeans(features, 8, rng);
  for (size_t i = 1; i < clustering.distortion_history.size(); ++i) {
    CHECK(clustering.distortion_history[i] <=
          clustering.distortion_history[i - 1] + 1e-9);
  }
}

TEST_CASE("kmeans rejects C > n") {
  Rng rng(11);
  FeatureMatrix features;
  features.ids = {"a"};
  features.rows = {{1.0}};
  CHECK_THROWS_AS(kmeans(features, 2, rng), InputError);
}

TEST_CASE("discrete laplace analytic pmf") {
  CHECK(discrete_laplace_pmf(1.0, 0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  // Symmetry.
  for (int64_t z : {1, 2, 5, 17}) {
    CHECK(discrete_laplace_pmf(0.7, z) == discrete_laplace_pmf(0.7, -z));
  }
  // Normalization.
  double sum = 0.0;
  for (int64_t z = -200; z <= 200; ++z) sum += discrete_laplace_pmf(0.5, z);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("discrete laplace sampler matches the pmf at moderate scales") {
  Rng rng(12);
  for (double a : {0.5, 1.0}) {
    double tv = verify::empirical_dlaplace_tv(a, 400000, rng);
    CHECK(tv < 0.006);
  }
}

TEST_CASE("discrete laplace extremes") {
  Rng rng(13);
  // Huge scale concentrates on zero.
  for (int i = 0; i < 100; ++i) CHECK(discrete_laplace(50.0, rng) == 0);
  CHECK_THROWS_AS(discrete_laplace(0.0, rng), InputError);
  CHECK_THROWS_AS(discrete_laplace(-1.0, rng), InputError);
}

TEST_CASE("histogram query satisfies the eps_p ratio bound analytically") {
  for (double eps_p : {0.5, 1.0, 2.0}) {
    double ratio = verify::histogram_neighbor_ratio(eps_p, 10);
    double bound = std::exp(eps_p);
    CHECK(ratio <= bound * (1.0 + 1e-9));
    CHECK(ratio >= bound * (1.0 - 1e-6));
  }
}

TEST_CASE("homogeneous cluster yields a near one-hot prior") {
  Rng data_rng(14);
  FeatureMatrix features;
  std::vector<int> labels;
  for (int i = 0; i < 1000; ++i) {
    features.ids.push_back(std::to_string(i));
    features.rows.push_back({0.01 * data_rng.next_gaussian()});
    labels.push_back(3);
  }
  ClusterPriorsResult result = cluster_histogram_priors(
      features, labels, LabelSpace{5}, 1, PrivacyBudget{1.0, 0.0}, Rng(99));
  const Prior& prior = result.priors.front();
  CHECK(prior.prob(3) > 0.9);
  for (int k = 0; k < 5; ++k) {
    if (k != 3) CHECK(prior.prob(k) < 0.05);
  }
  CHECK(result.spent.epsilon == 1.0);
}

TEST_CASE("huge eps_p reproduces the exact normalized histogram") {
  FeatureMatrix features;
  std::vector<int> labels{0, 0, 0, 1, 2};
  for (int i = 0; i < 5; ++i) {
    features.ids.push_back(std::to_string(i));
    features.rows.push_back({static_cast<double>(i < 3 ? 0 : 5)});
  }
  ClusterPriorsResult result = cluster_histogram_priors(
      features, labels, LabelSpace{3}, 1, PrivacyBudget{600.0, 0.0}, Rng(5));
  const Prior& prior = result.priors.front();
  CHECK(prior.prob(0) == doctest::Approx(0.6));
  CHECK(prior.prob(1) == doctest::Approx(0.2));
  CHECK(prior.prob(2) == doctest::Approx(0.2));
  // A single cluster means one shared prior for every example.
  for (const auto& p : result.priors) {
    CHECK(p.probs() == prior.probs());
  }
}

TEST_CASE("all-clipped histogram falls back to uniform") {
  // With tiny eps_p and zero counts everywhere except huge negative noise,
  // force the all-zero case by using an empty-label trick: a single example
  // and a scale so small the noise dominates. Instead of relying on luck,
  // check the documented fallback through repeated draws: at least one
  // cluster with all-negative noisy counts must produce a uniform prior.
  FeatureMatrix features;
  std::vector<int> labels{0};
  features.ids = {"only"};
  features.rows = {{0.0}};
  bool saw_uniform = false;
  for (uint64_t seed = 0; seed < 200 && !saw_uniform; ++seed) {
    ClusterPriorsResult result = cluster_histogram_priors(
        features, labels, LabelSpace{3}, 1, PrivacyBudget{0.05, 0.0}, Rng(seed));
    bool all_nonpositive = true;
    for (int64_t c : result.histograms.front().counts) {
      all_nonpositive = all_nonpositive && c <= 0;
    }
    if (all_nonpositive) {
      saw_uniform = true;
      for (int k = 0; k < 3; ++k) {
        CHECK(result.priors.front().prob(k) == doctest::Approx(1.0 / 3));
      }
    }
  }
  CHECK(saw_uniform);
}

TEST_CASE("misaligned labels are rejected") {
  FeatureMatrix features;
  features.ids = {"a", "b"};
  features.rows = {{0.0}, {1.0}};
  std::vector<int> labels{0};
  CHECK_THROWS_AS(cluster_histogram_priors(features, labels, LabelSpace{2}, 1,
                                           PrivacyBudget{1.0, 0.0}, Rng(1)),
                  InputError);
}

TEST_CASE("cluster priors are deterministic under a fixed seed") {
  Rng data_rng(15);
  FeatureMatrix features = two_clouds(30, 50.0, data_rng);
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(i < 30 ? 0 : 1);
  ClusterPriorsResult a = cluster_histogram_priors(
      features, labels, LabelSpace{2}, 2, PrivacyBudget{0.5, 0.0}, Rng(77));
  ClusterPriorsResult b = cluster_histogram_priors(
      features, labels, LabelSpace{2}, 2, PrivacyBudget{0.5, 0.0}, Rng(77));
  for (size_t i = 0; i < a.priors.size(); ++i) {
    CHECK(a.priors[i].probs() == b.priors[i].probs());
  }
}
