/*
 * Copyright 2026 The costbo Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "costbo/acquisition.hpp"

namespace costbo {
namespace {

// Independent EI: composite Simpson integration of max(f - y, 0) against the
// Gaussian density over mu +- 12 sigma.
double ei_quadrature(double mu, double sigma, double f_min) {
  const double a = mu - 12.0 * sigma;
  const double b = std::min(f_min, mu + 12.0 * sigma);
  if (b <= a) return 0.0;
  const int n = 20000;
  const double h = (b - a) / n;
  auto g = [&](double y) {
    const double z = (y - mu) / sigma;
    return (f_min - y) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  double s = g(a) + g(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

std::vector<std::size_t> brute_front(const std::vector<Candidate>& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < c.size() && !dominated; ++j) {
      if (j == i) continue;
      const bool weak = c[j].cost_pred <= c[i].cost_pred && c[j].ei >= c[i].ei;
      dominated = weak && (c[j].cost_pred < c[i].cost_pred || c[j].ei > c[i].ei);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

Candidate cand(double ei_v, double cost) { return {UnitPoint{std::vector<double>{0.0}}, ei_v, cost}; }

std::vector<Candidate> random_candidates(std::mt19937_64& rng, std::size_t n, bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 5);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (coarse) {
      out.push_back(cand(0.1 * grid(rng), 1.0 + grid(rng)));
    } else {
      out.push_back(cand(u(rng) < 0.1 ? 0.0 : u(rng), std::exp(4.0 * u(rng) - 2.0)));
    }
  }
  return out;
}

TEST(EiTest, DeterministicCases) {
  EXPECT_DOUBLE_EQ(ei(1.0, 0.0, 3.0), 2.0);
  EXPECT_DOUBLE_EQ(ei(3.0, 0.0, 1.0), 0.0);
  EXPECT_NEAR(ei(0.0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(EiTest, NonFiniteInputsRejected) {
  EXPECT_THROW(ei(std::nan(""), 1.0, 0.0), NumericError);
  EXPECT_THROW(ei(0.0, std::numeric_limits<double>::infinity(), 0.0), NumericError);
  EXPECT_THROW(ei(0.0, -1.0, 0.0), NumericError);
}

TEST(EiTest, MatchesQuadrature) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> s(0.01, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double mu = n(rng), sigma = s(rng), f = n(rng);
    EXPECT_NEAR(ei(mu, sigma, f), ei_quadrature(mu, sigma, f), 1e-9) << mu << " " << sigma << " " << f;
  }
}

TEST(EiTest, MonteCarloAtOrigin) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = std::max(0.0, -z(rng));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LE(std::abs(ei(0.0, 1.0, 0.0) - mean), 3.0 * se);
}

TEST(EiTest, FarTailPositiveAndMonotone) {
  double prev = 0.0;
  for (double gap = -60.0; gap <= -25.0; gap += 0.5) {
    const double v = ei(0.0, 1.0, gap);
    EXPECT_GE(v, 0.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_GT(ei(0.0, 1.0, -31.0), 0.0);
  // Continuity across the switch to the asymptotic series.
  EXPECT_NEAR(ei(0.0, 1.0, -30.0 + 1e-9) / ei(0.0, 1.0, -30.0 - 1e-9), 1.0, 1e-6);
}

TEST(EiTest, DominatesDeterministicImprovementAndMonotone) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> s(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const double mu = n(rng), sigma = s(rng), f = n(rng);
    EXPECT_GE(ei(mu, sigma, f), std::max(0.0, f - mu) - 1e-15);
    EXPECT_GE(ei(mu, sigma + 0.1, f), ei(mu, sigma, f));
    EXPECT_GE(ei(mu, sigma, f + 0.1), ei(mu, sigma, f));
  }
}

TEST(EiTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> s(0.01, 2.0);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const double mu = n(rng), sigma = s(rng), f = n(rng);
    const auto g = ei_gradient(mu, sigma, f);
    const double dmu = (ei(mu + h, sigma, f) - ei(mu - h, sigma, f)) / (2 * h);
    const double ds = (ei(mu, sigma + h, f) - ei(mu, sigma - h, f)) / (2 * h);
    EXPECT_NEAR(g.d_mu, dmu, 1e-4 * std::max(1.0, std::abs(dmu)));
    EXPECT_NEAR(g.d_sigma, ds, 1e-4 * std::max(1.0, std::abs(ds)));
  }
}

TEST(AcquisitionKindTest, EiCoolSchedule) {
  EXPECT_EQ(ei_cool_alpha(100.0, 20.0, 20.0), 1.0);
  EXPECT_EQ(ei_cool_alpha(100.0, 20.0, 100.0), 0.0);
  EXPECT_DOUBLE_EQ(ei_cool_alpha(100.0, 20.0, 60.0), 0.5);
  EXPECT_EQ(ei_cool_alpha(100.0, 20.0, 5.0), 1.0);
  EXPECT_EQ(ei_cool_alpha(100.0, 20.0, 500.0), 0.0);
  EXPECT_THROW(ei_cool_alpha(20.0, 20.0, 20.0), ConfigError);
}

TEST(AcquisitionKindTest, ScoreArithmetic) {
  const auto c = cand(0.4, 4.0);
  EXPECT_DOUBLE_EQ(score(AcquisitionKind::ei_alpha(1.0), c), 0.1);
  EXPECT_DOUBLE_EQ(score(AcquisitionKind::ei_alpha(0.0), c), 0.4);
  EXPECT_DOUBLE_EQ(score(AcquisitionKind::ei_alpha(0.5), c), 0.2);
  EXPECT_DOUBLE_EQ(score(AcquisitionKind::eipu(), c), 0.1);
  EXPECT_DOUBLE_EQ(score(AcquisitionKind::ei_cool(100.0, 20.0), c, 60.0), 0.2);
  EXPECT_THROW(score(AcquisitionKind::cei(0.5), c), UsageError);
}

TEST(AcquisitionKindTest, ValidationAndNames) {
  EXPECT_THROW(AcquisitionKind::ei_alpha(-0.1).validate(), ConfigError);
  EXPECT_THROW(AcquisitionKind::cei(1.5).validate(), ConfigError);
  EXPECT_THROW(AcquisitionKind::ei_cool(10.0, 10.0).validate(), ConfigError);
  for (const auto& k : {AcquisitionKind::ei(), AcquisitionKind::eipu(), AcquisitionKind::ei_alpha(0.3),
                        AcquisitionKind::cei(0.25)}) {
    const auto back = AcquisitionKind::parse(k.name());
    EXPECT_EQ(back.type, k.type);
    EXPECT_EQ(back.alpha, k.alpha);
    EXPECT_EQ(back.lambda, k.lambda);
  }
  EXPECT_THROW(AcquisitionKind::parse("ucb"), ConfigError);
}

TEST(DominanceTest, Examples) {
  EXPECT_EQ(dominates(cand(0.5, 1.0), cand(0.4, 2.0)), Dominance::kStrict);
  EXPECT_EQ(dominates(cand(0.5, 1.0), cand(0.5, 1.0)), Dominance::kWeak);
  EXPECT_EQ(dominates(cand(0.4, 1.0), cand(0.5, 2.0)), Dominance::kNone);
}

TEST(ParetoTest, SmallExampleAndSingleton) {
  const std::vector<Candidate> c{cand(0.5, 1.0), cand(0.4, 2.0), cand(0.9, 3.0)};
  const auto f = pareto_front(c);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].ei, 0.5);
  EXPECT_EQ(f[1].ei, 0.9);
  EXPECT_EQ(pareto_front(std::vector<Candidate>{cand(0.1, 7.0)}).size(), 1u);
}

TEST(ParetoTest, DuplicatesRetained) {
  const std::vector<Candidate> c{cand(0.5, 1.0), cand(0.5, 1.0), cand(0.2, 2.0)};
  EXPECT_EQ(pareto_front_indices(c), (std::vector<std::size_t>{0, 1}));
}

TEST(ParetoTest, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 2u, 7u, 64u, 512u}) {
    for (bool coarse : {false, true}) {
      auto c = random_candidates(rng, n, coarse);
      auto got = pareto_front_indices(c);
      std::sort(got.begin(), got.end());
      EXPECT_EQ(got, brute_front(c));
    }
  }
}

TEST(ParetoTest, SortedByCost) {
  std::mt19937_64 rng(6);
  const auto c = random_candidates(rng, 300, false);
  const auto f = pareto_front(c);
  for (std::size_t i = 1; i < f.size(); ++i) {
    EXPECT_LE(f[i - 1].cost_pred, f[i].cost_pred);
    EXPECT_LT(f[i - 1].ei, f[i].ei);
  }
}

TEST(CeiTest, HandExample) {
  const std::vector<Candidate> c{cand(1.0, 10.0), cand(0.9, 2.0), cand(0.5, 1.0)};
  const auto r = cei_select(c, 0.2);
  EXPECT_NEAR(*r.threshold, 0.8, 1e-15);
  EXPECT_EQ(r.chosen_index, 1u);
}

TEST(CeiTest, Endpoints) {
  const std::vector<Candidate> c{cand(1.0, 10.0), cand(1.0, 5.0), cand(0.5, 1.0), cand(0.0, 0.5)};
  EXPECT_EQ(cei_select(c, 0.0).chosen_index, 1u);
  EXPECT_EQ(cei_select(c, 1.0).chosen_index, 3u);
  EXPECT_THROW(cei_select({}, 0.5), UsageError);
  EXPECT_THROW(cei_select(c, 1.1), UsageError);
}

TEST(CeiTest, LambdaMonotone) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const auto c = random_candidates(rng, 50, t % 2 == 0);
    double prev_cost = std::numeric_limits<double>::infinity(), prev_ei = prev_cost;
    for (int l = 0; l <= 10; ++l) {
      const auto r = cei_select(c, l / 10.0);
      EXPECT_LE(r.chosen.cost_pred, prev_cost);
      EXPECT_LE(r.chosen.ei, prev_ei);
      prev_cost = r.chosen.cost_pred;
      prev_ei = r.chosen.ei;
    }
  }
}

TEST(SelectTest, ChosenIsNonDominatedForEveryKind) {
  std::mt19937_64 rng(8);
  std::vector<AcquisitionKind> kinds{AcquisitionKind::ei(), AcquisitionKind::eipu(),
                                     AcquisitionKind::ei_cool(100.0, 10.0)};
  for (double a : {0.1, 0.5, 2.0}) kinds.push_back(AcquisitionKind::ei_alpha(a));
  for (double l : {0.0, 0.25, 1.0}) kinds.push_back(AcquisitionKind::cei(l));
  for (int t = 0; t < 200; ++t) {
    const auto c = random_candidates(rng, 40, t % 3 == 0);
    const auto front = brute_front(c);
    for (const auto& k : kinds) {
      const auto r = select(k, c, 55.0);
      EXPECT_TRUE(std::binary_search(front.begin(), front.end(), r.chosen_index)) << k.name();
    }
  }
}

TEST(SelectTest, DegenerateAllZeroPicksCheapest) {
  const std::vector<Candidate> c{cand(0.0, 3.0), cand(0.0, 1.0), cand(0.0, 2.0)};
  const auto r = select(AcquisitionKind::ei(), c);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.chosen_index, 1u);
}

TEST(SelectTest, CostScaleInvariance) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    auto c = random_candidates(rng, 60, false);
    auto scaled = c;
    for (auto& x : scaled) x.cost_pred *= 8.0;
    for (double a : {0.5, 1.0, 2.0}) {
      EXPECT_EQ(select(AcquisitionKind::ei_alpha(a), c).chosen_index,
                select(AcquisitionKind::ei_alpha(a), scaled).chosen_index);
    }
  }
}

TEST(ImpliedAlphaTest, EiAndEipuCases) {
  // Unique max-EI point that is also the cheapest: every alpha picks it.
  const std::vector<Candidate> a{cand(1.0, 1.0), cand(0.5, 2.0)};
  const auto ia = implied_alpha(cei_select(a, 0.0));
  ASSERT_TRUE(ia.has_value());
  EXPECT_EQ(ia->lower, 0.0);

  // EIpu maximizer (ei/cost = 0.5) differs from the max-EI point.
  const std::vector<Candidate> b{cand(1.0, 10.0), cand(0.5, 1.0)};
  const auto ib = implied_alpha(cei_select(b, 0.6));
  ASSERT_TRUE(ib.has_value());
  EXPECT_LE(ib->lower, 1.0);
  EXPECT_GE(ib->upper, 1.0);
}

TEST(ImpliedAlphaTest, MatchesExhaustiveGridScan) {
  const std::vector<Candidate> c{cand(1.0, 10.0), cand(0.9, 2.0), cand(0.5, 1.0)};
  const auto sel = cei_select(c, 0.2);
  // Oracle: recompute every grid argmax directly.
  const auto grid = implied_alpha_grid();
  std::vector<bool> hit;
  for (double g : grid) {
    std::size_t best = 0;
    double bs = -1.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double s = c[i].ei / std::pow(c[i].cost_pred, g);
      if (s > bs) {
        bs = s;
        best = i;
      }
    }
    hit.push_back(best == sel.chosen_index);
  }
  std::size_t best_len = 0, best_start = 0;
  for (std::size_t i = 0; i < hit.size();) {
    if (!hit[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < hit.size() && hit[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_start = i;
    }
    i = j;
  }
  ASSERT_GT(best_len, 0u);
  const auto ia = implied_alpha(sel);
  ASSERT_TRUE(ia.has_value());
  EXPECT_EQ(ia->lower, grid[best_start]);
  EXPECT_EQ(ia->upper, grid[best_start + best_len - 1]);
  EXPECT_EQ(ia->value, 0.5 * (ia->lower + ia->upper));
  // ln(0.9/1.0)/ln(2/10) ~ 0.065 and ln(0.5/0.9)/ln(1/2) ~ 0.848 bound the run.
  EXPECT_GT(ia->lower, 0.065);
  EXPECT_LT(ia->upper, 0.848);
}

TEST(ImpliedAlphaTest, NoneWhenUnreachable) {
  // The middle point is dominated by no one but lies below the hull, so no
  // exponent makes it the argmax.
  const std::vector<Candidate> c{cand(1.0, 4.0), cand(0.3, 2.0), cand(0.25, 1.0)};
  const auto sel = cei_select(c, 0.71);
  ASSERT_EQ(sel.chosen_index, 1u);
  EXPECT_FALSE(implied_alpha(sel).has_value());
}

class ProposeFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    space = std::make_unique<SearchSpace>(std::vector<Dimension>{Dimension::continuous("a", 0.1, 10.0, DimScale::kLog),
                                                                 Dimension::continuous("b", 0.0, 1.0)});
    std::mt19937_64 rng(10);
    for (const auto& p : sample_uniform(*space, rng, 8)) {
      history.push_back(p);
      y.push_back(std::sin(5 * p[0]) + p[1]);
      samples.push_back({from_unit(*space, p), std::exp(2.0 * p[0])});
    }
    gp = gp_fit(history, y, rng);
    cost = lv_fit(*space, samples, 1);
  }
  ProposalInput input() const {
    ProposalInput in;
    in.space = space.get();
    in.surrogate = &*gp;
    in.cost_model = &*cost;
    in.history = history;
    in.f_min = *std::min_element(y.begin(), y.end());
    return in;
  }
  std::unique_ptr<SearchSpace> space;
  std::vector<UnitPoint> history;
  std::vector<double> y;
  std::vector<CostSample> samples;
  std::optional<GPModel> gp;
  std::optional<CostModel> cost;
};

TEST_F(ProposeFixture, CandidateSetShapeAndChoiceOnFront) {
  ProposalOptions opt;
  opt.candidate_count = 256;
  for (const auto& k : {AcquisitionKind::ei(), AcquisitionKind::eipu(), AcquisitionKind::cei(0.5)}) {
    std::mt19937_64 rng(11);
    const auto r = propose(k, input(), opt, rng);
    EXPECT_EQ(r.candidates.size(), 256u + 10u * history.size());
    const auto front = brute_front(r.candidates);
    EXPECT_TRUE(std::binary_search(front.begin(), front.end(), r.chosen_index));
    for (const auto& c : r.candidates) {
      for (double v : c.point.coords) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST_F(ProposeFixture, EiAlphaZeroEqualsEi) {
  ProposalOptions opt;
  opt.candidate_count = 128;
  std::mt19937_64 r1(12), r2(12);
  const auto a = propose(AcquisitionKind::ei(), input(), opt, r1);
  const auto b = propose(AcquisitionKind::ei_alpha(0.0), input(), opt, r2);
  EXPECT_EQ(a.chosen_index, b.chosen_index);
  EXPECT_EQ(a.chosen.point, b.chosen.point);
}

TEST_F(ProposeFixture, FixedCandidatesAndCostFloor) {
  std::vector<UnitPoint> fixed{history[0], history[3]};
  auto in = input();
  in.fixed_candidates = &fixed;
  in.cost_floor = 1e6;
  std::mt19937_64 rng(13);
  const auto r = propose(AcquisitionKind::eipu(), in, ProposalOptions{}, rng);
  ASSERT_EQ(r.candidates.size(), 2u);
  for (const auto& c : r.candidates) EXPECT_EQ(c.cost_pred, 1e6);
  EXPECT_EQ(cost_floor(std::vector<double>{4.0, 0.5}), 0.005);
  EXPECT_EQ(cost_floor(std::vector<double>{1e-6}), 1e-6);
}

TEST(SobolTest, DeterministicAndInRange) {
  std::mt19937_64 a(14), b(14);
  const auto p = sobol_candidates(3, 100, a);
  const auto q = sobol_candidates(3, 100, b);
  ASSERT_EQ(p.size(), 100u);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i], q[i]);
    for (double v : p[i].coords) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

}  // namespace
}  // namespace costbo
