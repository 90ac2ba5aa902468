// Copyright 2026 The ttsdiag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_support.hpp"
#include "ttsdiag/error.hpp"
#include "ttsdiag/metrics.hpp"

using namespace ttsdiag;
using namespace ttsdiag::testing;

namespace {

struct RandomSet {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores quantized to sixteenths so ties are common.
RandomSet random_set(std::mt19937_64& rng, int max_n) {
  RandomSet d;
  const int n = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_n - 1));
  for (int i = 0; i < n; ++i) {
    d.scores.push_back(static_cast<double>(rng() % 17) / 16.0);
    d.labels.push_back(static_cast<int>(rng() % 2));
  }
  d.labels[0] = 0;
  d.labels[1] = 1;
  return d;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("auc examples") {
    CHECK(auc(ScoredSet(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 1, 0})) == 1.0);
    CHECK(auc(ScoredSet(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0})) == 0.5);
    CHECK(auc(ScoredSet(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0})) == 0.0);
  }

  TEST_CASE("average precision examples") {
    CHECK(average_precision(ScoredSet(std::vector<double>{0.9, 0.8, 0.3, 0.2},
                                      std::vector<int>{1, 1, 0, 0})) == 1.0);
    CHECK(average_precision(ScoredSet(std::vector<double>{0.9, 0.8, 0.7, 0.1},
                                      std::vector<int>{0, 0, 0, 1})) == 0.25);
    // One tie group holding everything: precision is the base rate.
    CHECK(average_precision(ScoredSet(std::vector<double>{0.5, 0.5, 0.5},
                                      std::vector<int>{1, 0, 0})) == doctest::Approx(1.0 / 3));
  }

  TEST_CASE("20 random pairs against oracles") {
    std::mt19937_64 rng(20);
    std::vector<double> s;
    std::vector<int> l;
    for (int i = 0; i < 20; ++i) {
      s.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
      l.push_back(i % 2);
    }
    const ScoredSet set(s, l);
    CHECK(std::abs(auc(set) - oracle_auc(s, l)) <= 1e-12);
    CHECK(std::abs(average_precision(set) - oracle_ap(s, l)) <= 1e-12);
  }

  TEST_CASE("property: oracle equivalence with heavy ties") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 1000; ++trial) {
      const RandomSet d = random_set(rng, 50);
      const ScoredSet set(d.scores, d.labels);
      CHECK(std::abs(auc(set) - oracle_auc(d.scores, d.labels)) <= 1e-12);
      CHECK(std::abs(average_precision(set) - oracle_ap(d.scores, d.labels)) <= 1e-12);
    }
  }

  TEST_CASE("property: auc is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      RandomSet d = random_set(rng, 40);
      const double base = auc(ScoredSet(d.scores, d.labels));
      const double base_ap = average_precision(ScoredSet(d.scores, d.labels));
      for (double& x : d.scores) x = std::exp(3 * x) - 7;
      CHECK(auc(ScoredSet(d.scores, d.labels)) == doctest::Approx(base).epsilon(1e-12));
      CHECK(average_precision(ScoredSet(d.scores, d.labels)) ==
            doctest::Approx(base_ap).epsilon(1e-12));
    }
  }

  TEST_CASE("property: auc symmetry under label and score flip") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 200; ++trial) {
      RandomSet d = random_set(rng, 40);
      const double base = auc(ScoredSet(d.scores, d.labels));
      for (int& y : d.labels) y = 1 - y;
      CHECK(auc(ScoredSet(d.scores, d.labels)) == doctest::Approx(1 - base).epsilon(1e-12));
      for (double& x : d.scores) x = -x;
      CHECK(auc(ScoredSet(d.scores, d.labels)) == doctest::Approx(base).epsilon(1e-12));
    }
  }

  TEST_CASE("property: order of pairs does not matter") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 200; ++trial) {
      const RandomSet d = random_set(rng, 40);
      std::vector<ScoredPair> pairs;
      for (std::size_t i = 0; i < d.scores.size(); ++i) pairs.push_back({d.scores[i], d.labels[i]});
      const ScoredSet a(pairs);
      std::shuffle(pairs.begin(), pairs.end(), rng);
      const ScoredSet b(pairs);
      CHECK(auc(a) == auc(b));
      CHECK(average_precision(a) == average_precision(b));
    }
  }

  TEST_CASE("scored set validation") {
    CHECK_THROWS_AS(ScoredSet(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), Error);
    CHECK_THROWS_AS(ScoredSet(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 2}), Error);
    CHECK_THROWS_AS(ScoredSet(std::vector<double>{0.1, NAN}, std::vector<int>{1, 0}), Error);
    CHECK_THROWS_AS(ScoredSet(std::vector<double>{0.1}, std::vector<int>{1, 0}), Error);
  }

  TEST_CASE("power law: exact synthetic recovery") {
    std::vector<PowerLawPoint> pts;
    for (int n : {1, 2, 4, 8, 16}) pts.push_back({n, 1 - 0.3 * std::pow(n, -0.5)});
    const PowerLawFit fit = fit_power_law(pts);
    CHECK(std::abs(fit.alpha - 0.3) <= 1e-9);
    CHECK(std::abs(fit.beta - 0.5) <= 1e-9);
    CHECK(fit.rmse <= 1e-9);
  }

  TEST_CASE("power law: two points interpolate, constants give beta 0") {
    const std::vector<PowerLawPoint> two = {{1, 0.7}, {16, 0.8}};
    const PowerLawFit f2 = fit_power_law(two);
    CHECK(f2.rmse <= 1e-12);
    CHECK(f2.alpha * std::pow(16, -f2.beta) == doctest::Approx(0.2).epsilon(1e-12));

    const std::vector<PowerLawPoint> flat = {{1, 0.6}, {4, 0.6}, {16, 0.6}};
    const PowerLawFit ff = fit_power_law(flat);
    CHECK(std::abs(ff.beta) <= 1e-12);
    CHECK(ff.alpha == doctest::Approx(0.4).epsilon(1e-12));
  }

  TEST_CASE("power law: noisy points match a direct least-squares oracle") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<PowerLawPoint> pts;
      for (int n : {1, 2, 4, 8, 16}) {
        const double noise = std::uniform_real_distribution<double>(-0.02, 0.02)(rng);
        pts.push_back({n, 1 - 0.35 * std::pow(n, -0.4) + noise});
      }
      // Oracle: minimize squared residuals by brute force over beta, with the
      // optimal log-alpha in closed form for each candidate.
      double best = INFINITY, best_beta = 0;
      for (double beta = -1; beta <= 2; beta += 1e-5) {
        double mean = 0;
        for (const auto& p : pts) mean += std::log(1 - p.metric) + beta * std::log(p.n);
        mean /= pts.size();
        double sse = 0;
        for (const auto& p : pts) {
          const double r = std::log(1 - p.metric) - (mean - beta * std::log(p.n));
          sse += r * r;
        }
        if (sse < best) {
          best = sse;
          best_beta = beta;
        }
      }
      const PowerLawFit fit = fit_power_law(pts);
      CHECK(std::abs(fit.beta - best_beta) <= 2e-5);
      CHECK(fit.rmse == doctest::Approx(std::sqrt(best / pts.size())).epsilon(1e-4));
    }
  }

  TEST_CASE("power law: invalid inputs") {
    CHECK_THROWS_AS(fit_power_law(std::vector<PowerLawPoint>{{1, 0.5}}), Error);
    CHECK_THROWS_AS(fit_power_law(std::vector<PowerLawPoint>{{4, 0.5}, {4, 0.6}}), Error);
    CHECK_THROWS_AS(fit_power_law(std::vector<PowerLawPoint>{{1, 0.5}, {2, 1.0}}), Error);
    CHECK_THROWS_AS(fit_power_law(std::vector<PowerLawPoint>{{0, 0.5}, {2, 0.6}}), Error);
  }
}
