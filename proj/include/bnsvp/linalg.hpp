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

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "bnsvp/errors.hpp"

namespace bnsvp {

inline double logsumexp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Cholesky factor of an SPD matrix. On failure adds
// 1e-8 * trace / M to the diagonal and retries with the jitter scaled by 10,
// at most three times.
inline Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& sigma, const std::string& what) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw NumericError(what + ": covariance must be a non-empty square matrix");
  }
  if (!sigma.allFinite()) throw NumericError(what + ": covariance has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) return llt;
  const double m = static_cast<double>(sigma.rows());
  double jitter = 1e-8 * std::abs(sigma.trace()) / m;
  if (jitter == 0.0) jitter = 1e-8;
  for (int attempt = 0; attempt < 3; ++attempt) {
    Eigen::MatrixXd bumped = sigma;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt;
    jitter *= 10.0;
  }
  throw NumericError(what + ": covariance is not positive definite");
}

// Multivariate normal density with a precomputed Cholesky factor.
class Gaussian {
 public:
  Gaussian(Eigen::VectorXd mean, const Eigen::MatrixXd& cov, const std::string& what = "gaussian")
      : mean_(std::move(mean)), llt_(robust_cholesky(cov, what)) {
    log_norm_ = -0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < mean_.size(); ++i) {
      log_norm_ -= std::log(llt_.matrixLLT()(i, i));
    }
  }

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd diff = x - mean_;
    const Eigen::VectorXd y = llt_.matrixL().solve(diff);
    return log_norm_ - 0.5 * y.squaredNorm();
  }

  // Lower-triangular factor L with L L^T = covariance (after any jitter).
  Eigen::MatrixXd factor() const { return llt_.matrixL(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_norm_ = 0.0;
};

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace bnsvp
