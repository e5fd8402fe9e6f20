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
#include <cstddef>
#include <string>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bnsvp/core_data.hpp"
#include "bnsvp/errors.hpp"

namespace bnsvp {

inline Matrix rbf_adjacency(const Matrix& x, double lengthscale) {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw ArgumentError("lengthscale must be positive and finite");
  const Eigen::Index n = x.rows();
  Matrix a(n, n);
  const double denom = 2.0 * lengthscale * lengthscale;
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / denom);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

inline Matrix temporal_adjacency(std::size_t n) {
  if (n < 1) throw ArgumentError("temporal adjacency needs at least one node");
  const auto m = static_cast<Eigen::Index>(n);
  Matrix a(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = std::exp(-static_cast<double>(std::abs(i - j)));
  }
  return a;
}

// D^{-1/2} (A + I) D^{-1/2} with D the row sums of A + I.
inline Matrix renormalized_laplacian(const Matrix& a) {
  if (a.rows() != a.cols()) throw ArgumentError("adjacency must be square");
  if ((a.array() < 0.0).any()) throw ArgumentError("adjacency must be nonnegative");
  Matrix ai = a;
  ai.diagonal().array() += 1.0;
  const Vector d = ai.rowwise().sum().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * ai * d.asDiagonal();
}

inline Matrix propagate(const Matrix& a_hat, const Matrix& x, const Matrix& w) {
  if (a_hat.rows() != a_hat.cols() || a_hat.cols() != x.rows()) throw ArgumentError("propagation operator does not match segment count");
  if (x.cols() != w.rows()) {
    throw ArgumentError("weight has " + std::to_string(w.rows()) + " rows but features have " + std::to_string(x.cols()) +
                        " columns");
  }
  return a_hat * x * w;
}

// Median of pairwise Euclidean distances; 1 when every row coincides.
inline double median_lengthscale(const Matrix& x) {
  std::vector<double> d;
  const Eigen::Index n = x.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  }
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

enum class Branch { kFeatureSimilarity, kTemporal };

struct PropagationLayer {
  Branch branch = Branch::kFeatureSimilarity;
  Matrix weight;                      // M x M'
  std::optional<double> lengthscale;  // unset: median heuristic per bag

  Matrix operator_for(const Matrix& x) const {
    if (branch == Branch::kTemporal) return renormalized_laplacian(temporal_adjacency(static_cast<std::size_t>(x.rows())));
    return renormalized_laplacian(rbf_adjacency(x, lengthscale ? *lengthscale : median_lengthscale(x)));
  }
};

}  // namespace bnsvp
