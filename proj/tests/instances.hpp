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

#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "bnsvp/mil.hpp"
#include "bnsvp/partition.hpp"
#include "bnsvp/random.hpp"
#include "bnsvp/submodular.hpp"

namespace bnsvp::testing {

// A small bag whose components are tight clusters far from the origin, with
// the induced similarity and uniform random segment scores.
struct ClusterInstance {
  Matrix features;
  PartitionResult partition;
  SimilarityMatrix similarity;
  std::vector<double> scores;
  std::size_t kappa = 0;
};

inline ClusterInstance cluster_instance(Rng& rng, std::size_t max_n = 12, std::size_t max_kappa = 4,
                                        std::size_t dim = 3) {
  ClusterInstance inst;
  inst.kappa = 1 + rng.uniform_index(max_kappa);
  const std::size_t n = inst.kappa + rng.uniform_index(max_n - inst.kappa + 1);
  std::vector<int> comp(n);
  std::iota(comp.begin(), comp.begin() + static_cast<std::ptrdiff_t>(inst.kappa), 0);
  for (std::size_t i = inst.kappa; i < n; ++i) comp[i] = static_cast<int>(rng.uniform_index(inst.kappa));
  rng.shuffle(comp);

  std::vector<Vector> centers;
  for (std::size_t c = 0; c < inst.kappa; ++c) {
    Vector dir = rng.normal_vector(static_cast<Eigen::Index>(dim));
    centers.push_back(5.0 * dir / dir.norm());
  }
  inst.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    inst.features.row(static_cast<Eigen::Index>(i)) =
        (centers[static_cast<std::size_t>(comp[i])] + 0.1 * rng.normal_vector(static_cast<Eigen::Index>(dim))).transpose();
  }
  // Alternate between two scenes so the keys are not all in scene 0.
  inst.partition.z.resize(n);
  inst.partition.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.partition.z[i] = comp[i] % 2;
    inst.partition.s[i] = comp[i] / 2;
  }
  for (std::size_t c = 0; c < inst.kappa; ++c) {
    const auto d = static_cast<Eigen::Index>(dim);
    inst.partition.emissions[{static_cast<int>(c % 2), static_cast<int>(c / 2)}] =
        GaussianParams{centers[c], Matrix::Identity(d, d)};
  }
  inst.partition.kappa = inst.kappa;
  inst.similarity = build_similarity(inst.features, inst.partition);
  inst.scores.resize(n);
  for (double& v : inst.scores) v = 0.01 + 0.98 * rng.uniform();
  return inst;
}

// Random nonnegative n x n similarity with a nested pair C ⊆ D and j ∉ D.
struct NestedTrial {
  SimilarityMatrix s;
  std::vector<std::size_t> c;
  std::vector<std::size_t> d;
  std::size_t j = 0;
};

inline NestedTrial nested_trial(Rng& rng, std::size_t max_n = 10) {
  NestedTrial t;
  const std::size_t n = 2 + rng.uniform_index(max_n - 1);
  Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index col = 0; col < a.cols(); ++col) a(r, col) = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
  }
  t.s.values = 0.5 * (a + a.transpose());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  t.j = order.back();
  const std::size_t d_size = rng.uniform_index(n);  // 0..n-1, leaves room for j
  const std::size_t c_size = rng.uniform_index(d_size + 1);
  t.d.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(d_size));
  t.c.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(c_size));
  return t;
}

// A random scorer, bag pair and loss for gradient checks.
struct GradientCase {
  ScorerModel model;
  BagInput pos;
  BagInput neg;
  LossKind kind = LossKind::kMaxMil;
  std::size_t k = 1;
  std::vector<int> scenes;
  std::vector<int> components;
  double l2 = 0.0;
  double smoothness = 0.0;
  double sparsity = 0.0;

  LossSpec spec() const {
    LossSpec s;
    s.kind = kind;
    s.k = k;
    s.scenes = &scenes;
    s.components = &components;
    s.l2 = l2;
    s.smoothness = smoothness;
    s.sparsity = sparsity;
    return s;
  }
};

inline GradientCase gradient_case(Rng& rng, bool propagation) {
  GradientCase g;
  const std::size_t dim = 2 + rng.uniform_index(4);
  const auto n_pos = static_cast<Eigen::Index>(3 + rng.uniform_index(8));
  const auto n_neg = static_cast<Eigen::Index>(2 + rng.uniform_index(7));
  auto random_matrix = [&](Eigen::Index r, Eigen::Index c, double scale) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
  };
  g.model = propagation ? ScorerModel::with_propagation(dim) : ScorerModel::linear(dim);
  for (Eigen::Index i = 0; i < g.model.w.size(); ++i) g.model.w[i] = 0.7 * rng.normal();
  g.model.b = 0.5 * rng.normal();
  if (propagation) {
    const auto d = static_cast<Eigen::Index>(dim);
    g.model.feature_branch->weight += random_matrix(d, d, 0.3);
    g.model.temporal_branch->weight += random_matrix(d, d, 0.3);
  }
  g.pos = prepare_bag(g.model, random_matrix(n_pos, static_cast<Eigen::Index>(dim), 1.0));
  g.neg = prepare_bag(g.model, random_matrix(n_neg, static_cast<Eigen::Index>(dim), 1.0));
  g.kind = static_cast<LossKind>(rng.uniform_index(3));
  g.k = 1 + rng.uniform_index(static_cast<std::size_t>(n_pos));
  const std::size_t kappa = 1 + rng.uniform_index(3);
  for (Eigen::Index i = 0; i < n_pos; ++i) {
    const auto c = static_cast<int>(rng.uniform_index(kappa));
    g.scenes.push_back(c % 2);
    g.components.push_back(c / 2);
  }
  const double l2_choices[] = {0.0, 0.001, 0.1};
  g.l2 = l2_choices[rng.uniform_index(3)];
  if (rng.bernoulli(0.25)) g.smoothness = 0.5 * rng.uniform();
  if (rng.bernoulli(0.25)) g.sparsity = 0.5 * rng.uniform();
  return g;
}

// Draws cases until one is away from every kink of the loss.
inline GradientCase smooth_gradient_case(Rng& rng, bool propagation) {
  for (;;) {
    GradientCase g = gradient_case(rng, propagation);
    if (!near_kink(g.model, g.pos, g.neg, g.spec())) return g;
  }
}

}  // namespace bnsvp::testing
