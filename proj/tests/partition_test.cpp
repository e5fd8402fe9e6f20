// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "bnsvp/metrics.hpp"
#include "bnsvp/partition.hpp"
#include "bnsvp/synth.hpp"

namespace bnsvp {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;

TEST(Gem, SingleStickSumsToOne) {
  Rng rng(1);
  const Vector w = sample_gem(2.0, 1, rng);
  ASSERT_EQ(w.size(), 2);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_GE(w[0], 0.0);
}

TEST(Gem, TinyConcentrationPutsMassFirst) {
  Rng rng(7);
  EXPECT_GT(sample_gem(1e-8, 5, rng)[0], 0.999);
}

TEST(Gem, LongTruncationNormalized) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Vector w = sample_gem(1.0, 50, rng);
    EXPECT_EQ(w.size(), 51);
    EXPECT_TRUE((w.array() >= 0.0).all());
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  }
  Rng rng(0);
  EXPECT_THROW(sample_gem(0.0, 3, rng), ArgumentError);
}

TEST(StickyRow, NonStickyRowNormalized) {
  Rng rng(2);
  const Vector row = sample_sticky_transition_row(Vector::Constant(2, 0.5), 0, 1.0, 0.0, rng);
  EXPECT_NEAR(row.sum(), 1.0, 1e-12);
}

TEST(StickyRow, HugeRhoSticks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Vector row = sample_sticky_transition_row(Vector::Constant(4, 0.25), 2, 1.0, 1e9, rng);
    EXPECT_GE(row[2], 0.999);
  }
}

TEST(StickyRow, StateOutOfRange) {
  Rng rng(0);
  EXPECT_THROW(sample_sticky_transition_row(Vector::Constant(3, 1.0 / 3), 3, 1.0, 1.0, rng), ArgumentError);
}

TEST(StickyRow, MonteCarloMatchesExpectation) {
  // (alpha, rho, beta_j) grid; beta spreads the rest evenly over two states.
  for (double alpha : {1.0, 2.0}) {
    for (double rho : {0.0, 1.0, 5.0}) {
      for (double bj : {0.25, 0.5}) {
        Vector beta(3);
        beta << bj, (1.0 - bj) / 2, (1.0 - bj) / 2;
        Rng rng(mix_seed(42, static_cast<std::uint64_t>(alpha * 100 + rho * 10 + bj * 4)));
        double mean = 0.0;
        for (int d = 0; d < 10000; ++d) mean += sample_sticky_transition_row(beta, 0, alpha, rho, rng)[0];
        mean /= 10000.0;
        EXPECT_NEAR(mean, expected_self_transition(alpha, rho, bj), 0.02)
            << "alpha=" << alpha << " rho=" << rho << " beta_j=" << bj;
      }
    }
  }
}

TEST(ExpectedTransition, HandValues) {
  EXPECT_DOUBLE_EQ(expected_self_transition(1.0, 1.0, 0.5), 0.75);
  EXPECT_EQ(expected_self_transition(3.0, 0.0, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(expected_self_transition(2.5, 4.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(expected_cross_transition(1.0, 1.0, 0.5), 0.25);
}

TEST(EmissionLoglik, StandardNormalAtMean) {
  EXPECT_NEAR(emission_loglik(Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1)), -kHalfLog2Pi, 1e-12);
  const Vector mu = Vector::LinSpaced(4, -1.0, 2.0);
  EXPECT_NEAR(emission_loglik(mu, mu, Matrix::Identity(4, 4)), -4.0 * kHalfLog2Pi, 1e-12);
}

TEST(EmissionLoglik, ImportanceWeightsAverageToOne) {
  Matrix sigma(2, 2);
  sigma << 2.0, 0.6, 0.6, 1.0;
  const Vector mu = Vector::LinSpaced(2, 1.0, -1.0);
  const Matrix proposal_cov = 1.5 * sigma;
  const Eigen::LLT<Matrix> llt(proposal_cov);
  const Matrix l = llt.matrixL();
  Rng rng(5);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vector x = mu + l * rng.normal_vector(2);
    mean += std::exp(emission_loglik(x, mu, sigma) - emission_loglik(x, mu, proposal_cov));
  }
  EXPECT_NEAR(mean / n, 1.0, 0.02);
}

TEST(EmissionLoglik, NonSpdNamesThePair) {
  try {
    emission_loglik(Vector::Zero(2), Vector::Zero(2), -Matrix::Identity(2, 2), "scene 2 component 1");
    FAIL() << "expected a numeric error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("scene 2 component 1"), std::string::npos);
  }
}

TEST(ForwardBackward, SingleStateIsAllZeros) {
  Rng rng(0);
  const auto z = forward_backward_sample_states(Matrix::Ones(1, 1), Matrix::Zero(10, 1), Vector::Ones(1), rng);
  EXPECT_EQ(z, std::vector<int>(10, 0));
}

TEST(ForwardBackward, ForcedState) {
  Rng rng(1);
  Matrix ll = Matrix::Constant(12, 3, -1e9);
  ll.col(1).setZero();
  const auto z = forward_backward_sample_states(Matrix::Constant(3, 3, 1.0 / 3), ll, Vector::Constant(3, 1.0 / 3), rng);
  EXPECT_EQ(z, std::vector<int>(12, 1));
}

TEST(ForwardBackward, RecoversTwoStateChain) {
  Rng rng(11);
  const int n = 200;
  std::vector<int> truth(n);
  Matrix ll(n, 2);
  int state = 0;
  for (int i = 0; i < n; ++i) {
    if (i > 0 && !rng.bernoulli(0.9)) state = 1 - state;
    truth[static_cast<std::size_t>(i)] = state;
    const double x = (state == 0 ? -5.0 : 5.0) + rng.normal();
    ll(i, 0) = -0.5 * (x + 5.0) * (x + 5.0) - kHalfLog2Pi;
    ll(i, 1) = -0.5 * (x - 5.0) * (x - 5.0) - kHalfLog2Pi;
  }
  Matrix pi(2, 2);
  pi << 0.9, 0.1, 0.1, 0.9;
  const auto z = forward_backward_sample_states(pi, ll, Vector::Constant(2, 0.5), rng);
  int agree = 0;
  for (int i = 0; i < n; ++i) agree += (z[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(i)]);
  EXPECT_GE(std::max(agree, n - agree), static_cast<int>(0.95 * n));
}

TEST(ForwardBackward, AllStatesImpossibleIsNumericError) {
  Rng rng(0);
  Matrix ll = Matrix::Zero(4, 2);
  ll.row(2).setConstant(-std::numeric_limits<double>::infinity());
  EXPECT_THROW(forward_backward_sample_states(Matrix::Constant(2, 2, 0.5), ll, Vector::Constant(2, 0.5), rng),
               NumericError);
}

TEST(ComponentAssignments, SingleComponent) {
  Rng rng(0);
  const auto s = sample_component_assignments(Matrix::Zero(5, 2), std::vector<int>(5, 1), Matrix::Ones(2, 1), rng);
  EXPECT_EQ(s, std::vector<int>(5, 0));
}

TEST(ComponentAssignments, LikelihoodRatioDominates) {
  EmissionGrid grid = {{Vector::Constant(1, 5.0), Matrix::Identity(1, 1)}, {Vector::Constant(1, -5.0), Matrix::Identity(1, 1)}};
  const Matrix x = Matrix::Constant(1000, 1, 5.0);
  Rng rng(3);
  const auto s = sample_component_assignments(x, std::vector<int>(1000, 0), Matrix::Constant(1, 2, 0.5), grid, rng);
  int hits = 0;
  for (int v : s) hits += (v == 0);
  EXPECT_GT(hits, 990);
}

TEST(ComponentAssignments, ZeroWeightNeverChosen) {
  Matrix psi(2, 2);
  psi << 1.0, 0.0, 0.5, 0.5;
  Rng rng(4);
  std::vector<int> z(500);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<int>(i % 2);
  const auto s = sample_component_assignments(Matrix::Zero(500, 4), z, psi, rng);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0) EXPECT_EQ(s[i], 0);
  }
}

NiwPrior unit_prior(Eigen::Index m, double kappa0 = 1.0) {
  NiwPrior p;
  p.mean0 = Vector::Zero(m);
  p.kappa0 = kappa0;
  p.nu0 = static_cast<double>(m) + 2.0;
  p.scale0 = Matrix::Identity(m, m);
  return p;
}

TEST(NiwPosterior, EmptyDataIsPrior) {
  const NiwPrior p = unit_prior(3, 0.5);
  const auto post = niw_posterior(p, Matrix(0, 3));
  EXPECT_EQ(post.mean, p.mean0);
  EXPECT_EQ(post.kappa, p.kappa0);
  EXPECT_EQ(post.nu, p.nu0);
  EXPECT_EQ(post.scale, p.scale0);
}

TEST(NiwPosterior, SinglePointHalfwayWithUnitKappa) {
  NiwPrior p = unit_prior(2, 1.0);
  p.mean0 << 1.0, -2.0;
  Matrix x(1, 2);
  x << 3.0, 4.0;
  const auto post = niw_posterior(p, x);
  EXPECT_NEAR(post.mean[0], 2.0, 1e-12);
  EXPECT_NEAR(post.mean[1], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(post.kappa, 2.0);
}

TEST(NiwPosterior, ManyPointsPinTheMean) {
  Rng rng(9);
  Matrix x(10000, 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = 3.0 + rng.normal();
  NiwPrior p = unit_prior(1, 1e-3);
  const auto post = niw_posterior(p, x);
  EXPECT_NEAR(post.mean[0], 3.0, 0.05);
  // A draw of mu lands near the posterior mean too.
  EmissionGrid grid = sample_emission_params(x, std::vector<int>(10000, 0), std::vector<int>(10000, 0), p, 1, 1, rng);
  EXPECT_NEAR(grid[0].mu[0], 3.0, 0.05);
}

TEST(NiwMarginal, SinglePointIsStudentT) {
  // The prior predictive of one point is multivariate t with nu0 - M + 1
  // degrees of freedom and shape scale0 (kappa0 + 1) / (kappa0 (nu0 - M + 1)).
  NiwPrior p = unit_prior(2, 0.7);
  p.nu0 = 5.0;
  p.scale0 << 2.0, 0.3, 0.3, 1.0;
  p.mean0 << 0.5, -1.0;
  Vector x(2);
  x << 1.5, 0.25;
  const double m = 2.0;
  const double dof = p.nu0 - m + 1.0;
  const Matrix shape = p.scale0 * (p.kappa0 + 1.0) / (p.kappa0 * dof);
  const Vector d = x - p.mean0;
  const double maha = d.dot(shape.inverse() * d);
  const double expected = std::lgamma((dof + m) / 2.0) - std::lgamma(dof / 2.0) - m / 2.0 * std::log(dof * std::numbers::pi) -
                          0.5 * std::log(shape.determinant()) - (dof + m) / 2.0 * std::log1p(maha / dof);
  GaussianStats st(2);
  st.add(x);
  EXPECT_NEAR(niw_log_marginal(p, st), expected, 1e-10);
  EXPECT_NEAR(niw_log_marginal(p, GaussianStats(2)), 0.0, 1e-12);
}

TEST(DirichletMarginal, MatchesSequentialPredictive) {
  // Labels 0,0,1 under symmetric Dirichlet(tau / T).
  const double tau = 1.5;
  const double a = tau / 3.0;
  const double expected = std::log(a / tau) + std::log((a + 1.0) / (tau + 1.0)) + std::log(a / (tau + 2.0));
  EXPECT_NEAR(dirichlet_log_marginal(tau, {2.0, 1.0, 0.0}), expected, 1e-12);
}

TEST(SplitMerge, StationaryOverLabelings) {
  // Four 1-D points and two labels: split-merge alone must visit every
  // label vector in proportion to its exact posterior mass.
  Matrix x(4, 1);
  x << -1.0, -0.6, 0.7, 1.1;
  NiwPrior prior = unit_prior(1, 0.5);
  prior.scale0(0, 0) = 0.5;
  const double tau = 1.0;
  std::vector<double> target(16);
  for (int code = 0; code < 16; ++code) {
    std::vector<double> counts(2, 0.0);
    GaussianStats g0(1), g1(1);
    for (int i = 0; i < 4; ++i) {
      const int label = (code >> i) & 1;
      counts[static_cast<std::size_t>(label)] += 1.0;
      (label ? g1 : g0).add(x.row(i).transpose());
    }
    target[static_cast<std::size_t>(code)] =
        std::exp(dirichlet_log_marginal(tau, counts) + niw_log_marginal(prior, g0) + niw_log_marginal(prior, g1));
  }
  double total = 0.0;
  for (double v : target) total += v;
  Rng rng(21);
  std::vector<int> z(4, 0), s(4, 0);
  std::vector<double> freq(16, 0.0);
  const int steps = 400000;
  for (int step = 0; step < steps; ++step) {
    split_merge_step(x, z, s, prior, 2, tau, rng);
    int code = 0;
    for (int i = 0; i < 4; ++i) code |= s[static_cast<std::size_t>(i)] << i;
    freq[static_cast<std::size_t>(code)] += 1.0 / steps;
  }
  for (int code = 0; code < 16; ++code) {
    EXPECT_NEAR(freq[static_cast<std::size_t>(code)], target[static_cast<std::size_t>(code)] / total, 0.01)
        << "labels " << code;
  }
}

PartitionConfig quick_config(std::uint64_t seed) {
  PartitionConfig c;
  c.n_iters = 60;
  c.burn_in = 20;
  c.seed = seed;
  return c;
}

PlantedBag planted_bag(std::uint64_t seed, std::size_t n = 120) {
  ScenarioConfig cfg;
  cfg.n_segments = n;
  cfg.dim = 4;
  cfg.n_bags_pos = 0;
  Rng rng(seed);
  return generate_planted_bag(cfg, false, "b", rng);
}

TEST(RunGibbs, ResultInvariants) {
  const auto pb = planted_bag(3);
  const PartitionConfig cfg = quick_config(5);
  const auto r = run_gibbs(pb.bag, cfg);
  ASSERT_EQ(r.z.size(), 120u);
  ASSERT_EQ(r.s.size(), 120u);
  EXPECT_NEAR(r.beta.sum(), 1.0, 1e-9);
  EXPECT_EQ(r.beta.size(), 11);
  EXPECT_TRUE((r.beta.array() >= 0.0).all());
  for (Eigen::Index j = 0; j < r.pi.rows(); ++j) EXPECT_NEAR(r.pi.row(j).sum(), 1.0, 1e-9);
  for (Eigen::Index j = 0; j < r.psi.rows(); ++j) EXPECT_NEAR(r.psi.row(j).sum(), 1.0, 1e-9);
  EXPECT_TRUE((r.pi.array() >= 0.0).all());
  EXPECT_TRUE((r.psi.array() >= 0.0).all());
  std::set<ComponentKey> distinct;
  for (std::size_t i = 0; i < r.z.size(); ++i) {
    distinct.emplace(r.z[i], r.s[i]);
    EXPECT_TRUE(r.emissions.count({r.z[i], r.s[i]}));
  }
  EXPECT_EQ(r.kappa, distinct.size());
  EXPECT_LE(r.kappa, cfg.max_states * cfg.max_components);
  for (const auto& [key, g] : r.emissions) {
    EXPECT_EQ(Eigen::LLT<Matrix>(g.sigma).info(), Eigen::Success);
  }
  ASSERT_EQ(r.loglik_trace.size(), cfg.n_iters);
  double post = 0.0;
  for (std::size_t i = cfg.burn_in; i < r.loglik_trace.size(); ++i) {
    EXPECT_TRUE(std::isfinite(r.loglik_trace[i]));
    post += r.loglik_trace[i];
  }
  post /= static_cast<double>(cfg.n_iters - cfg.burn_in);
  EXPECT_GT(post, r.loglik_trace.front());
  EXPECT_EQ(r.transition_trace.size(), cfg.n_iters);
  EXPECT_EQ(r.transition_trace.back(), scene_transitions(r.z));
}

TEST(RunGibbs, Deterministic) {
  const auto pb = planted_bag(4, 60);
  const auto a = run_gibbs(pb.bag, quick_config(9));
  const auto b = run_gibbs(pb.bag, quick_config(9));
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.s, b.s);
  EXPECT_EQ(a.loglik_trace, b.loglik_trace);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(RunGibbs, ConstantBagHasOneComponent) {
  Bag bag;
  bag.id = "flat";
  bag.features = Matrix::Constant(40, 3, 1.25);
  const auto r = run_gibbs(bag, quick_config(1));
  EXPECT_EQ(r.kappa, 1u);
}

TEST(RunGibbs, RecoversPlantedScenes) {
  const auto pb = planted_bag(0, 200);
  PartitionConfig cfg;
  cfg.seed = 100;
  const auto r = run_gibbs(pb.bag, cfg);
  std::vector<long> a, b;
  for (std::size_t i = 0; i < r.z.size(); ++i) {
    a.push_back(r.z[i] * 100L + r.s[i]);
    b.push_back(pb.scenes[i] * 10L + pb.components[i]);
  }
  EXPECT_GE(adjusted_rand_index(a, b), 0.8);
}

TEST(RunGibbs, ConfigValidation) {
  const auto pb = planted_bag(1, 20);
  PartitionConfig cfg = quick_config(0);
  cfg.burn_in = cfg.n_iters;
  EXPECT_THROW(run_gibbs(pb.bag, cfg), ArgumentError);
  cfg = quick_config(0);
  cfg.rho = -1.0;
  EXPECT_THROW(run_gibbs(pb.bag, cfg), ArgumentError);
  cfg = quick_config(0);
  cfg.max_components = 0;
  EXPECT_THROW(run_gibbs(pb.bag, cfg), ArgumentError);
}

TEST(PartitionJson, RoundTrip) {
  const auto pb = planted_bag(2, 50);
  const auto r = run_gibbs(pb.bag, quick_config(3));
  const auto j = to_json(r);
  for (const char* key : {"z", "s", "kappa", "components", "loglik_trace"}) EXPECT_TRUE(j.contains(key)) << key;
  const auto back = partition_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.z, r.z);
  EXPECT_EQ(back.s, r.s);
  EXPECT_EQ(back.kappa, r.kappa);
  EXPECT_EQ(back.loglik_trace, r.loglik_trace);
  ASSERT_EQ(back.emissions.size(), r.emissions.size());
  for (const auto& [key, g] : r.emissions) {
    EXPECT_TRUE(back.emissions.at(key).mu.isApprox(g.mu, 1e-15));
    EXPECT_TRUE(back.emissions.at(key).sigma.isApprox(g.sigma, 1e-15));
  }
  EXPECT_THROW(partition_from_json(nlohmann::json::parse(R"({"z": [0]})")), FormatError);
}

}  // namespace
}  // namespace bnsvp
