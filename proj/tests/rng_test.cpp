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
#include <vector>

#include "doctest.h"
#include "labelrand/rng.hpp"

using labelrand::Rng;

TEST_CASE("streams are deterministic and seed-sensitive") {
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 100; ++i) {
    uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_differs = any_differs || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("forks depend on the key, not on parent draw position") {
  Rng parent(7);
  Rng fork_before = parent.fork(uint64_t{123});
  for (int i = 0; i < 10; ++i) parent.next_u64();
  Rng fork_after = parent.fork(uint64_t{123});
  for (int i = 0; i < 20; ++i) {
    CHECK(fork_before.next_u64() == fork_after.next_u64());
  }

  Rng other_key = parent.fork(uint64_t{124});
  bool differs = false;
  Rng again = parent.fork(uint64_t{123});
  for (int i = 0; i < 20; ++i) {
    differs = differs || again.next_u64() != other_key.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("string forks hash the id") {
  Rng parent(7);
  CHECK(parent.fork("abc").next_u64() ==
        parent.fork(labelrand::fnv1a64("abc")).next_u64());
  CHECK(parent.fork("abc").next_u64() != parent.fork("abd").next_u64());
}

TEST_CASE("next_double lies in the unit interval with a sane mean") {
  Rng rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("next_below is unbiased across small ranges") {
  Rng rng(2);
  std::vector<int> counts(5, 0);
  const int n = 250000;
  for (int i = 0; i < n; ++i) ++counts[rng.next_below(5)];
  for (int c : counts) {
    CHECK(std::abs(c - n / 5) < 5 * std::sqrt(n / 5.0));
  }
}

TEST_CASE("gaussian moments") {
  Rng rng(3);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = rng.next_gaussian();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("beta(a,a) is symmetric with the right mean and variance") {
  Rng rng(4);
  const double alpha = 4.0;
  double sum = 0.0;
  double sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double b = rng.next_beta(alpha, alpha);
    REQUIRE(b > 0.0);
    REQUIRE(b < 1.0);
    sum += b;
    sq += b * b;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.005);
  // Var Beta(4,4) = 1/36.
  CHECK(std::abs(var - 1.0 / 36.0) < 0.002);
}
