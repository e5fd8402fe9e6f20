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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bnsvp/errors.hpp"

namespace bnsvp {

// SplitMix64 finalizer. Used to derive independent stream seeds from a
// master seed and a stream index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seeded random source. All stochastic routines take an Rng& so that a
// single seed fully determines a run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform() {
    // (0, 1): never returns 0 so log(uniform()) is finite.
    double u;
    do {
      u = std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // log of a Gamma(shape, 1) draw. Shapes below one use the boost
  // Gamma(a) = Gamma(a + 1) * U^(1/a) so tiny shapes do not underflow to 0.
  double log_gamma(double shape) {
    if (!(shape > 0.0)) throw ArgumentError("gamma shape must be positive");
    if (shape < 1.0) {
      const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
      return std::log(g) + std::log(uniform()) / shape;
    }
    return std::log(std::gamma_distribution<double>(shape, 1.0)(engine_));
  }

  double gamma(double shape) { return std::exp(log_gamma(shape)); }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  double beta(double a, double b) {
    const double la = log_gamma(a);
    const double lb = log_gamma(b);
    const double m = std::max(la, lb);
    const double ea = std::exp(la - m);
    const double eb = std::exp(lb - m);
    return ea / (ea + eb);
  }

  // Dirichlet draw, normalized in log space. Entries may underflow to 0
  // but the vector always sums to 1.
  Eigen::VectorXd dirichlet(const Eigen::VectorXd& params) {
    const Eigen::Index n = params.size();
    if (n == 0) throw ArgumentError("dirichlet needs at least one parameter");
    Eigen::VectorXd logs(n);
    for (Eigen::Index k = 0; k < n; ++k) logs[k] = log_gamma(params[k]);
    const double m = logs.maxCoeff();
    Eigen::VectorXd out = (logs.array() - m).exp().matrix();
    out /= out.sum();
    return out;
  }

  // Index drawn with probability proportional to exp(log_weights). Entries
  // equal to -inf are never chosen.
  std::size_t categorical_log(std::span<const double> log_weights) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : log_weights) m = std::max(m, v);
    if (!std::isfinite(m)) throw NumericError("categorical over all -inf weights");
    double total = 0.0;
    for (double v : log_weights) total += std::exp(v - m);
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < log_weights.size(); ++k) {
      const double w = std::exp(log_weights[k] - m);
      if (w > 0.0) last_positive = k;
      if (u < w) return k;
      u -= w;
    }
    return last_positive;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own index draws; std::shuffle's algorithm is
    // implementation-defined.
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bnsvp
