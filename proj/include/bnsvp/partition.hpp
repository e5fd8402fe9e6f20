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

// Sticky HDP-HMM with DP-mixture Gaussian emissions.
//
// The sampler is a weak-limit (truncated) blocked Gibbs sampler: L scenes,
// T mixture components per scene. One sweep resamples, in order,
//   beta   global stick weights, from auxiliary table counts with the
//          sticky override correction;
//   pi     transition rows, Dir(alpha * beta + rho * e_j + n_j);
//   psi    per-scene component weights, truncated stick-breaking posterior;
//   theta  (mu, Sigma) per (scene, component), Normal-Inverse-Wishart;
//   z      scene sequence, jointly by backward messages + forward sampling;
//   s      component of each segment given its scene.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnsvp/core_data.hpp"
#include "bnsvp/errors.hpp"
#include "bnsvp/linalg.hpp"
#include "bnsvp/random.hpp"

namespace bnsvp {

// Normal-Inverse-Wishart base measure for the Gaussian atoms.
struct NiwPrior {
  Vector mean0;
  double kappa0 = 0.1;
  double nu0 = 0.0;
  Matrix scale0;

  Eigen::Index dim() const { return mean0.size(); }

  void validate() const {
    const Eigen::Index m = dim();
    if (m < 1) throw ArgumentError("NIW prior mean must be non-empty");
    if (!(kappa0 > 0.0)) throw ArgumentError("NIW kappa0 must be positive");
    if (!(nu0 > static_cast<double>(m) - 1.0)) throw ArgumentError("NIW nu0 must exceed dim - 1");
    if (scale0.rows() != m || scale0.cols() != m) throw ArgumentError("NIW scale0 has the wrong shape");
    if (!scale0.isApprox(scale0.transpose(), 1e-10)) throw ArgumentError("NIW scale0 must be symmetric");
    Eigen::LLT<Matrix> llt(scale0);
    if (llt.info() != Eigen::Success) throw ArgumentError("NIW scale0 must be positive definite");
  }

  // Data-driven default: empirical mean, kappa0 = 0.1, nu0 = M + 2 and the
  // empirical covariance plus a small ridge as scale.
  static NiwPrior from_data(const Matrix& x) {
    NiwPrior p;
    const Eigen::Index m = x.cols();
    p.mean0 = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - p.mean0.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows());
    const double ridge = 1e-3 * cov.trace() / static_cast<double>(m) + 1e-6;
    cov.diagonal().array() += ridge;
    p.scale0 = symmetrize(cov);
    p.kappa0 = 0.1;
    p.nu0 = static_cast<double>(m) + 2.0;
    return p;
  }
};

struct PartitionConfig {
  double alpha = 1.0;
  double gamma = 1.0;
  double rho = 1.0;
  double tau = 1.0;
  std::size_t max_states = 10;
  std::size_t max_components = 5;
  std::size_t n_iters = 300;
  std::size_t burn_in = 100;
  std::uint64_t seed = 0;
  // Split-merge proposals on component labels after each sweep; 0 runs the
  // plain blocked sweep.
  std::size_t split_merge_moves = 20;
  // Unset means NiwPrior::from_data on the bag being partitioned.
  std::optional<NiwPrior> emission_prior;

  void validate() const {
    if (!(alpha > 0.0) || !(gamma > 0.0) || !(tau > 0.0)) {
      throw ArgumentError("alpha, gamma and tau must be positive");
    }
    if (!(rho >= 0.0)) throw ArgumentError("rho must be nonnegative");
    if (max_states < 1 || max_components < 1) throw ArgumentError("max_states and max_components must be >= 1");
    if (n_iters < 1) throw ArgumentError("n_iters must be positive");
    if (burn_in >= n_iters) throw ArgumentError("burn_in must be smaller than n_iters");
    if (emission_prior) emission_prior->validate();
  }
};

struct GaussianParams {
  Vector mu;
  Matrix sigma;
};

using ComponentKey = std::pair<int, int>;  // (scene, component)

struct PartitionResult {
  std::vector<int> z;
  std::vector<int> s;
  Vector beta;  // L + 1, last entry is the truncation remainder
  Matrix pi;    // L x L
  Matrix psi;   // L x T
  // Parameters of every occupied (scene, component) pair.
  std::map<ComponentKey, GaussianParams> emissions;
  std::size_t kappa = 0;
  std::vector<double> loglik_trace;
  // Scene changes along the sequence after each sweep.
  std::vector<std::size_t> transition_trace;
  std::size_t burn_in = 0;

  std::size_t segments() const { return z.size(); }

  // Occupied pairs in ascending (scene, component) order.
  std::vector<ComponentKey> occupied() const {
    std::set<ComponentKey> keys;
    for (std::size_t i = 0; i < z.size(); ++i) keys.emplace(z[i], s[i]);
    return {keys.begin(), keys.end()};
  }
};

// ---------------------------------------------------------------------------
// Prior pieces
// ---------------------------------------------------------------------------

// Truncated stick-breaking draw from GEM(concentration): `truncation`
// weights followed by the leftover stick.
inline Vector sample_gem(double concentration, std::size_t truncation, Rng& rng) {
  if (!(concentration > 0.0)) throw ArgumentError("GEM concentration must be positive");
  if (truncation < 1) throw ArgumentError("GEM truncation must be positive");
  Vector w(static_cast<Eigen::Index>(truncation) + 1);
  double remaining = 1.0;
  for (std::size_t k = 0; k < truncation; ++k) {
    const double v = rng.beta(1.0, concentration);
    w[static_cast<Eigen::Index>(k)] = v * remaining;
    remaining *= (1.0 - v);
  }
  w[static_cast<Eigen::Index>(truncation)] = std::max(0.0, 1.0 - w.head(static_cast<Eigen::Index>(truncation)).sum());
  return w;
}

// Stick-breaking posterior given per-atom counts. With `keep_remainder`
// the result has counts.size() + 1 entries; otherwise the last stick takes
// everything left and the result has counts.size() entries.
inline Vector sample_stick_posterior(double concentration, const std::vector<double>& counts, bool keep_remainder,
                                     Rng& rng) {
  const std::size_t n = counts.size();
  Vector w(static_cast<Eigen::Index>(keep_remainder ? n + 1 : n));
  double tail = 0.0;
  for (double c : counts) tail += c;
  double remaining = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    tail -= counts[k];
    const bool last = (k + 1 == n) && !keep_remainder;
    const double v = last ? 1.0 : rng.beta(1.0 + counts[k], concentration + std::max(0.0, tail));
    w[static_cast<Eigen::Index>(k)] = v * remaining;
    remaining *= (1.0 - v);
  }
  if (keep_remainder) w[static_cast<Eigen::Index>(n)] = std::max(0.0, 1.0 - w.head(static_cast<Eigen::Index>(n)).sum());
  w /= w.sum();
  return w;
}

// Moves the truncation remainder (last entry) onto the last state.
inline Vector fold_remainder(const Vector& beta_with_remainder) {
  const Eigen::Index l = beta_with_remainder.size() - 1;
  if (l < 1) throw ArgumentError("beta must have at least one state plus remainder");
  Vector b = beta_with_remainder.head(l);
  b[l - 1] += beta_with_remainder[l];
  return b;
}

// Dirichlet draw with parameters alpha * beta + rho * e_j (+ counts).
inline Vector sample_sticky_transition_row(const Vector& beta, std::size_t j, double alpha, double rho, Rng& rng,
                                           const Vector* counts = nullptr) {
  const Eigen::Index l = beta.size();
  if (static_cast<Eigen::Index>(j) >= l) throw ArgumentError("state index out of range");
  if ((beta.array() < 0.0).any()) throw ArgumentError("beta entries must be nonnegative");
  if (!(alpha > 0.0) || !(rho >= 0.0)) throw ArgumentError("alpha must be positive and rho nonnegative");
  Vector params = alpha * beta;
  params[static_cast<Eigen::Index>(j)] += rho;
  if (counts) params += *counts;
  for (Eigen::Index k = 0; k < l; ++k) params[k] = std::max(params[k], 1e-300);
  return rng.dirichlet(params);
}

// Prior mean of pi_jj given beta.
inline double expected_self_transition(double alpha, double rho, double beta_j) {
  return (alpha * beta_j + rho) / (alpha + rho);
}

// Prior mean of pi_jk for k != j.
inline double expected_cross_transition(double alpha, double rho, double beta_k) {
  return alpha * beta_k / (alpha + rho);
}

// ---------------------------------------------------------------------------
// Emissions
// ---------------------------------------------------------------------------

inline double emission_loglik(const Vector& x, const Vector& mu, const Matrix& sigma,
                              const std::string& what = "emission") {
  return Gaussian(mu, sigma, what).log_density(x);
}

namespace detail {

inline std::string pair_name(int k, int t) {
  return "scene " + std::to_string(k) + " component " + std::to_string(t);
}

// Returns sigma, or sigma plus the jitter robust_cholesky needed.
inline Matrix ensure_spd(const Matrix& sigma, const std::string& what) {
  Matrix sym = symmetrize(sigma);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return sym;
  const auto fixed = robust_cholesky(sym, what);
  const Matrix l = fixed.matrixL();
  return l * l.transpose();
}

// Draw (mu, Sigma) from NIW(mean, kappa, nu, scale).
inline GaussianParams sample_niw(const Vector& mean, double kappa, double nu, const Matrix& scale, Rng& rng,
                                 const std::string& what) {
  const Eigen::Index m = mean.size();
  // Sigma^{-1} ~ Wishart(nu, scale^{-1}) by the Bartlett decomposition.
  const auto scale_llt = robust_cholesky(scale, what);
  const Matrix scale_inv = scale_llt.solve(Matrix::Identity(m, m));
  const Matrix c = robust_cholesky(symmetrize(scale_inv), what).matrixL();
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(nu - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Matrix b = c * a;  // lower triangular, precision = b b^T
  const Matrix b_inv = b.triangularView<Eigen::Lower>().solve(Matrix::Identity(m, m));
  GaussianParams out;
  out.sigma = ensure_spd(b_inv.transpose() * b_inv, what);
  const Matrix lchol = robust_cholesky(out.sigma / kappa, what).matrixL();
  out.mu = mean + lchol * rng.normal_vector(m);
  return out;
}

}  // namespace detail

// Posterior NIW hyperparameters after observing `points`.
struct NiwPosterior {
  Vector mean;
  double kappa;
  double nu;
  Matrix scale;
};

inline NiwPosterior niw_posterior(const NiwPrior& prior, const Matrix& points) {
  const auto n = static_cast<double>(points.rows());
  if (points.rows() == 0) return {prior.mean0, prior.kappa0, prior.nu0, prior.scale0};
  const Vector xbar = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - xbar.transpose();
  const Vector d = xbar - prior.mean0;
  NiwPosterior post;
  post.kappa = prior.kappa0 + n;
  post.nu = prior.nu0 + n;
  post.mean = (prior.kappa0 * prior.mean0 + n * xbar) / post.kappa;
  post.scale = symmetrize(prior.scale0 + centered.transpose() * centered +
                          (prior.kappa0 * n / post.kappa) * d * d.transpose());
  return post;
}

// Row-major grid of (scene, component) parameters, index k * T + t.
using EmissionGrid = std::vector<GaussianParams>;

// Draws parameters for every (scene, component) pair from the NIW
// posterior of the segments assigned to it. Empty pairs draw from the prior.
inline EmissionGrid sample_emission_params(const Matrix& x, const std::vector<int>& z, const std::vector<int>& s,
                                           const NiwPrior& prior, std::size_t n_states, std::size_t n_components,
                                           Rng& rng) {
  if (x.cols() != prior.dim()) throw ArgumentError("prior dimension does not match features");
  if (z.size() != static_cast<std::size_t>(x.rows()) || s.size() != z.size()) {
    throw ArgumentError("assignment length does not match segment count");
  }
  std::vector<std::vector<Eigen::Index>> members(n_states * n_components);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0 || static_cast<std::size_t>(z[i]) >= n_states || s[i] < 0 ||
        static_cast<std::size_t>(s[i]) >= n_components) {
      throw ArgumentError("assignment out of range at segment " + std::to_string(i));
    }
    members[static_cast<std::size_t>(z[i]) * n_components + static_cast<std::size_t>(s[i])].push_back(
        static_cast<Eigen::Index>(i));
  }
  EmissionGrid grid(n_states * n_components);
  for (std::size_t k = 0; k < n_states; ++k) {
    for (std::size_t t = 0; t < n_components; ++t) {
      const auto& idx = members[k * n_components + t];
      Matrix pts(static_cast<Eigen::Index>(idx.size()), x.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) pts.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
      const NiwPosterior post = niw_posterior(prior, pts);
      grid[k * n_components + t] = detail::sample_niw(post.mean, post.kappa, post.nu, post.scale, rng,
                                                      detail::pair_name(static_cast<int>(k), static_cast<int>(t)));
    }
  }
  return grid;
}

// log N(x_i | theta_{k,t}) for every segment and pair: n x (L*T).
inline Matrix component_logliks(const Matrix& x, const EmissionGrid& grid) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const Gaussian g(grid[c].mu, grid[c].sigma, "component " + std::to_string(c));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out(i, static_cast<Eigen::Index>(c)) = g.log_density(x.row(i).transpose());
    }
  }
  return out;
}

// Per-state likelihood with components marginalized: logsumexp_t(log psi + loglik).
inline Matrix marginal_state_logliks(const Matrix& comp_ll, const Matrix& psi) {
  const Eigen::Index l = psi.rows();
  const Eigen::Index t = psi.cols();
  Matrix out(comp_ll.rows(), l);
  std::vector<double> terms(static_cast<std::size_t>(t));
  for (Eigen::Index i = 0; i < comp_ll.rows(); ++i) {
    for (Eigen::Index k = 0; k < l; ++k) {
      for (Eigen::Index c = 0; c < t; ++c) {
        terms[static_cast<std::size_t>(c)] = std::log(psi(k, c)) + comp_ll(i, k * t + c);
      }
      out(i, k) = logsumexp(terms);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// State and component sampling
// ---------------------------------------------------------------------------

// Draws the whole scene sequence from p(z | pi, likelihoods): backward
// messages in log space, then forward sampling.
inline std::vector<int> forward_backward_sample_states(const Matrix& pi, const Matrix& state_logliks,
                                                       const Vector& init_dist, Rng& rng) {
  const Eigen::Index n = state_logliks.rows();
  const Eigen::Index l = state_logliks.cols();
  if (pi.rows() != l || pi.cols() != l || init_dist.size() != l) {
    throw ArgumentError("transition matrix, likelihoods and initial distribution disagree on state count");
  }
  if (n == 0) return {};
  if (state_logliks.array().isNaN().any()) throw NumericError("state log-likelihoods contain NaN");
  const Matrix log_pi = pi.array().log().matrix();
  const Vector log_init = init_dist.array().log().matrix();

  // msg(i, j) = log p(x_{i+1..n-1} | z_i = j)
  Matrix msg = Matrix::Zero(n, l);
  std::vector<double> terms(static_cast<std::size_t>(l));
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    for (Eigen::Index j = 0; j < l; ++j) {
      for (Eigen::Index k = 0; k < l; ++k) {
        terms[static_cast<std::size_t>(k)] = log_pi(j, k) + state_logliks(i + 1, k) + msg(i + 1, k);
      }
      msg(i, j) = logsumexp(terms);
    }
  }

  std::vector<int> z(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    bool any = false;
    for (Eigen::Index k = 0; k < l; ++k) {
      const double prior = (i == 0) ? log_init[k] : log_pi(z[static_cast<std::size_t>(i - 1)], k);
      terms[static_cast<std::size_t>(k)] = prior + state_logliks(i, k) + msg(i, k);
      any = any || std::isfinite(terms[static_cast<std::size_t>(k)]);
    }
    if (!any) {
      throw NumericError("degenerate emission: every state has zero likelihood at segment " + std::to_string(i));
    }
    z[static_cast<std::size_t>(i)] = static_cast<int>(rng.categorical_log(terms));
  }
  return z;
}

// s_i ~ psi_{z_i, t} * N(x_i | theta_{z_i, t}), given the n x (L*T) table of
// component log-likelihoods.
inline std::vector<int> sample_component_assignments(const Matrix& comp_ll, const std::vector<int>& z,
                                                     const Matrix& psi, Rng& rng) {
  const Eigen::Index t = psi.cols();
  if (comp_ll.rows() != static_cast<Eigen::Index>(z.size()) || comp_ll.cols() != psi.rows() * t) {
    throw ArgumentError("component likelihood table does not match assignments");
  }
  std::vector<int> s(z.size());
  std::vector<double> terms(static_cast<std::size_t>(t));
  for (std::size_t i = 0; i < z.size(); ++i) {
    const Eigen::Index k = z[i];
    if (k < 0 || k >= psi.rows()) throw ArgumentError("scene id out of range");
    for (Eigen::Index c = 0; c < t; ++c) {
      terms[static_cast<std::size_t>(c)] =
          std::log(psi(k, c)) + comp_ll(static_cast<Eigen::Index>(i), k * t + c);
    }
    s[i] = static_cast<int>(rng.categorical_log(terms));
  }
  return s;
}

inline std::vector<int> sample_component_assignments(const Matrix& x, const std::vector<int>& z,
                                                     const Matrix& psi, const EmissionGrid& grid, Rng& rng) {
  return sample_component_assignments(component_logliks(x, grid), z, psi, rng);
}

// ---------------------------------------------------------------------------
// Split-merge moves on component assignments
//
// Metropolis-Hastings moves in the style of Jain & Neal: for two segments of
// the same scene, either split their shared component (sequential
// allocation of the other members) or merge their two components. The
// target integrates out psi and the Gaussian parameters, which the next
// sweep redraws from their full conditionals before they are used.
// ---------------------------------------------------------------------------

// Sufficient statistics of the points assigned to one component.
struct GaussianStats {
  double n = 0.0;
  Vector sum;
  Matrix outer;

  explicit GaussianStats(Eigen::Index dim) : sum(Vector::Zero(dim)), outer(Matrix::Zero(dim, dim)) {}

  void add(const Eigen::Ref<const Vector>& x) {
    n += 1.0;
    sum += x;
    outer.noalias() += x * x.transpose();
  }
};

// log p(points) under the NIW prior, Gaussian parameters integrated out.
inline double niw_log_marginal(const NiwPrior& prior, const GaussianStats& st) {
  const auto m = static_cast<double>(prior.dim());
  const double kn = prior.kappa0 + st.n;
  const double nn = prior.nu0 + st.n;
  Matrix sn = prior.scale0;
  if (st.n > 0.0) {
    const Vector xbar = st.sum / st.n;
    const Vector d = xbar - prior.mean0;
    sn += st.outer - st.n * xbar * xbar.transpose() + (prior.kappa0 * st.n / kn) * d * d.transpose();
  }
  auto log_det = [](const Matrix& a) {
    const auto llt = robust_cholesky(symmetrize(a), "NIW marginal");
    const Matrix l = llt.matrixL();
    return 2.0 * l.diagonal().array().log().sum();
  };
  auto log_multigamma = [m](double a) {
    double r = m * (m - 1.0) / 4.0 * std::log(std::numbers::pi);
    for (int j = 1; j <= static_cast<int>(m); ++j) r += std::lgamma(a + (1.0 - j) / 2.0);
    return r;
  };
  return -0.5 * st.n * m * std::log(std::numbers::pi) + log_multigamma(nn / 2.0) - log_multigamma(prior.nu0 / 2.0) +
         0.5 * prior.nu0 * log_det(prior.scale0) - 0.5 * nn * log_det(sn) +
         0.5 * m * (std::log(prior.kappa0) - std::log(kn));
}

// log probability of one scene's component labels under the weak-limit
// Dirichlet(tau / T, ..., tau / T) prior with psi integrated out.
inline double dirichlet_log_marginal(double tau, const std::vector<double>& counts) {
  const double a = tau / static_cast<double>(counts.size());
  double n = 0.0;
  double lp = 0.0;
  for (double c : counts) {
    n += c;
    lp += std::lgamma(a + c) - std::lgamma(a);
  }
  return lp + std::lgamma(tau) - std::lgamma(tau + n);
}

namespace detail {

inline std::vector<double> scene_component_counts(const std::vector<int>& z, const std::vector<int>& s, int scene,
                                                  std::size_t n_components) {
  std::vector<double> c(n_components, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == scene) c[static_cast<std::size_t>(s[i])] += 1.0;
  }
  return c;
}

// Sequentially allocates `others` between the groups seeded by anchors i
// and j. When `forced` is given, replays that allocation and only returns
// its log probability. Each point joins a group with probability
// proportional to group size times posterior predictive density.
inline double sequential_allocation(const Matrix& x, const NiwPrior& prior, Eigen::Index i, Eigen::Index j,
                                    const std::vector<Eigen::Index>& others, std::vector<int>& to_j,
                                    const std::vector<int>* forced, Rng& rng) {
  GaussianStats gi(x.cols()), gj(x.cols());
  gi.add(x.row(i).transpose());
  gj.add(x.row(j).transpose());
  double ml_i = niw_log_marginal(prior, gi);
  double ml_j = niw_log_marginal(prior, gj);
  double log_q = 0.0;
  to_j.assign(others.size(), 0);
  for (std::size_t r = 0; r < others.size(); ++r) {
    const Vector xr = x.row(others[r]).transpose();
    GaussianStats ti = gi, tj = gj;
    ti.add(xr);
    tj.add(xr);
    const double new_i = niw_log_marginal(prior, ti);
    const double new_j = niw_log_marginal(prior, tj);
    const double li = std::log(gi.n) + new_i - ml_i;
    const double lj = std::log(gj.n) + new_j - ml_j;
    const double m = std::max(li, lj);
    const double p_j = std::exp(lj - m) / (std::exp(li - m) + std::exp(lj - m));
    const bool pick_j = forced ? ((*forced)[r] != 0) : rng.bernoulli(p_j);
    log_q += pick_j ? std::log(p_j) : std::log1p(-p_j);
    to_j[r] = pick_j ? 1 : 0;
    if (pick_j) {
      gj = tj;
      ml_j = new_j;
    } else {
      gi = ti;
      ml_i = new_i;
    }
  }
  return log_q;
}

inline double group_log_marginal(const Matrix& x, const NiwPrior& prior, const std::vector<Eigen::Index>& idx) {
  GaussianStats st(x.cols());
  for (Eigen::Index i : idx) st.add(x.row(i).transpose());
  return niw_log_marginal(prior, st);
}

}  // namespace detail

// One split-merge proposal. Returns true when the proposal was accepted.
inline bool split_merge_step(const Matrix& x, const std::vector<int>& z, std::vector<int>& s, const NiwPrior& prior,
                             std::size_t n_components, double tau, Rng& rng) {
  const std::size_t n = z.size();
  if (n < 2 || n_components < 2) return false;
  const auto i = static_cast<Eigen::Index>(rng.uniform_index(n));
  const int scene = z[static_cast<std::size_t>(i)];
  std::vector<Eigen::Index> same_scene;
  for (std::size_t m = 0; m < n; ++m) {
    if (z[m] == scene && static_cast<Eigen::Index>(m) != i) same_scene.push_back(static_cast<Eigen::Index>(m));
  }
  if (same_scene.empty()) return false;
  const Eigen::Index j = same_scene[rng.uniform_index(same_scene.size())];
  const int a = s[static_cast<std::size_t>(i)];
  const int b = s[static_cast<std::size_t>(j)];

  const std::vector<double> counts = detail::scene_component_counts(z, s, scene, n_components);
  auto empty_labels = [](const std::vector<double>& c) {
    std::vector<int> e;
    for (std::size_t t = 0; t < c.size(); ++t) {
      if (c[t] == 0.0) e.push_back(static_cast<int>(t));
    }
    return e;
  };

  std::vector<Eigen::Index> others;
  for (Eigen::Index m : same_scene) {
    const int sm = s[static_cast<std::size_t>(m)];
    if (m != j && (sm == a || sm == b)) others.push_back(m);
  }
  std::vector<int> to_j;

  if (a == b) {
    // Split: j moves to an empty label chosen uniformly.
    const std::vector<int> empties = empty_labels(counts);
    if (empties.empty()) return false;
    const int c = empties[rng.uniform_index(empties.size())];
    const double log_q = -std::log(static_cast<double>(empties.size())) +
                         detail::sequential_allocation(x, prior, i, j, others, to_j, nullptr, rng);
    std::vector<Eigen::Index> group_i{i}, group_j{j}, merged{i, j};
    for (std::size_t r = 0; r < others.size(); ++r) {
      (to_j[r] ? group_j : group_i).push_back(others[r]);
      merged.push_back(others[r]);
    }
    std::vector<double> split_counts = counts;
    split_counts[static_cast<std::size_t>(a)] = static_cast<double>(group_i.size());
    split_counts[static_cast<std::size_t>(c)] = static_cast<double>(group_j.size());
    const double log_ratio = dirichlet_log_marginal(tau, split_counts) + detail::group_log_marginal(x, prior, group_i) +
                             detail::group_log_marginal(x, prior, group_j) - dirichlet_log_marginal(tau, counts) -
                             detail::group_log_marginal(x, prior, merged) - log_q;
    if (std::log(rng.uniform()) < log_ratio) {
      for (Eigen::Index m : group_j) s[static_cast<std::size_t>(m)] = c;
      return true;
    }
    return false;
  }

  // Merge b into a. The reverse split picks b among the merged scene's
  // empty labels and replays the current allocation.
  std::vector<double> merged_counts = counts;
  merged_counts[static_cast<std::size_t>(a)] += merged_counts[static_cast<std::size_t>(b)];
  merged_counts[static_cast<std::size_t>(b)] = 0.0;
  const auto empties_after = static_cast<double>(empty_labels(merged_counts).size());
  std::vector<int> current(others.size());
  std::vector<Eigen::Index> group_i{i}, group_j{j}, merged{i, j};
  for (std::size_t r = 0; r < others.size(); ++r) {
    current[r] = s[static_cast<std::size_t>(others[r])] == b ? 1 : 0;
    (current[r] ? group_j : group_i).push_back(others[r]);
    merged.push_back(others[r]);
  }
  const double log_q_rev = -std::log(empties_after) +
                           detail::sequential_allocation(x, prior, i, j, others, to_j, &current, rng);
  const double log_ratio = dirichlet_log_marginal(tau, merged_counts) + detail::group_log_marginal(x, prior, merged) -
                           dirichlet_log_marginal(tau, counts) - detail::group_log_marginal(x, prior, group_i) -
                           detail::group_log_marginal(x, prior, group_j) + log_q_rev;
  if (std::log(rng.uniform()) < log_ratio) {
    for (Eigen::Index m : group_j) s[static_cast<std::size_t>(m)] = a;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Blocked Gibbs sampler

// ---------------------------------------------------------------------------

namespace detail {

inline Matrix transition_counts(const std::vector<int>& z, Eigen::Index l) {
  Matrix n = Matrix::Zero(l, l);
  for (std::size_t i = 1; i < z.size(); ++i) n(z[i - 1], z[i]) += 1.0;
  return n;
}

// Auxiliary table counts m_jk with the sticky override removed, summed
// over j: the sufficient statistic for the beta posterior.
inline std::vector<double> override_table_counts(const Matrix& counts, const Vector& beta, double alpha, double rho,
                                                 Rng& rng) {
  const Eigen::Index l = counts.rows();
  std::vector<double> mbar(static_cast<std::size_t>(l), 0.0);
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index k = 0; k < l; ++k) {
      const auto njk = static_cast<int>(counts(j, k));
      if (njk == 0) continue;
      const double conc = alpha * beta[k] + (j == k ? rho : 0.0);
      int tables = 0;
      for (int r = 0; r < njk; ++r) tables += rng.bernoulli(conc / (static_cast<double>(r) + conc)) ? 1 : 0;
      if (j == k && tables > 0 && rho > 0.0) {
        const double p_override = rho / (rho + alpha * beta[j]);
        int overridden = 0;
        for (int r = 0; r < tables; ++r) overridden += rng.bernoulli(p_override) ? 1 : 0;
        tables -= overridden;
      }
      mbar[static_cast<std::size_t>(k)] += tables;
    }
  }
  return mbar;
}

inline double joint_loglik(const std::vector<int>& z, const std::vector<int>& s, const Vector& init,
                           const Matrix& pi, const Matrix& psi, const Matrix& comp_ll) {
  const Eigen::Index t = psi.cols();
  double ll = std::log(init[z[0]]);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i > 0) ll += std::log(pi(z[i - 1], z[i]));
    ll += std::log(psi(z[i], s[i])) + comp_ll(static_cast<Eigen::Index>(i), z[i] * t + s[i]);
  }
  return ll;
}

}  // namespace detail

// Number of positions where the scene changes.
inline std::size_t scene_transitions(const std::vector<int>& z) {
  std::size_t c = 0;
  for (std::size_t i = 1; i < z.size(); ++i) c += (z[i] != z[i - 1]);
  return c;
}

// Runs the blocked Gibbs sampler on one bag's n x M features and returns
// the final sample. Deterministic given config.seed.
inline PartitionResult run_gibbs(const Matrix& x, const PartitionConfig& config) {
  config.validate();
  if (x.rows() < 2) throw ArgumentError("partitioning needs at least two segments");
  if (!x.allFinite()) throw ArgumentError("features must be finite");
  const NiwPrior prior = config.emission_prior ? *config.emission_prior : NiwPrior::from_data(x);
  if (prior.dim() != x.cols()) throw ArgumentError("emission prior dimension does not match features");

  const auto n = static_cast<std::size_t>(x.rows());
  const auto l = static_cast<Eigen::Index>(config.max_states);
  const auto t = static_cast<Eigen::Index>(config.max_components);
  Rng rng(config.seed);

  // Contiguous equal blocks over the L states, every component 0.
  std::vector<int> z(n), s(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = static_cast<int>(i * config.max_states / n);
  }
  Vector beta = sample_gem(config.gamma, config.max_states, rng);
  Matrix pi(l, l);
  Matrix psi(l, t);
  EmissionGrid grid;
  Matrix comp_ll;
  Vector init;

  PartitionResult result;
  result.loglik_trace.reserve(config.n_iters);
  result.transition_trace.reserve(config.n_iters);
  result.burn_in = config.burn_in;
  for (std::size_t iter = 0; iter < config.n_iters; ++iter) {
    const Matrix counts = detail::transition_counts(z, l);
    beta = sample_stick_posterior(config.gamma, detail::override_table_counts(counts, fold_remainder(beta),
                                                                             config.alpha, config.rho, rng),
                                  true, rng);
    const Vector beta_l = fold_remainder(beta);
    for (Eigen::Index j = 0; j < l; ++j) {
      const Vector row_counts = counts.row(j).transpose();
      pi.row(j) = sample_sticky_transition_row(beta_l, static_cast<std::size_t>(j), config.alpha, config.rho, rng,
                                               &row_counts)
                      .transpose();
    }
    for (Eigen::Index k = 0; k < l; ++k) {
      std::vector<double> comp_counts(static_cast<std::size_t>(t), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (z[i] == k) comp_counts[static_cast<std::size_t>(s[i])] += 1.0;
      }
      Vector params(t);
      for (Eigen::Index c = 0; c < t; ++c) params[c] = config.tau / static_cast<double>(t) + comp_counts[static_cast<std::size_t>(c)];
      psi.row(k) = rng.dirichlet(params).transpose();
    }
    grid = sample_emission_params(x, z, s, prior, config.max_states, config.max_components, rng);
    comp_ll = component_logliks(x, grid);
    init = beta_l;
    z = forward_backward_sample_states(pi, marginal_state_logliks(comp_ll, psi), init, rng);
    s = sample_component_assignments(comp_ll, z, psi, rng);
    for (std::size_t m = 0; m < config.split_merge_moves; ++m) {
      split_merge_step(x, z, s, prior, config.max_components, config.tau, rng);
    }
    const double ll = detail::joint_loglik(z, s, init, pi, psi, comp_ll);
    if (!std::isfinite(ll)) throw NumericError("joint log-likelihood is not finite at iteration " + std::to_string(iter));
    result.loglik_trace.push_back(ll);
    result.transition_trace.push_back(scene_transitions(z));
  }

  result.z = z;
  result.s = s;
  result.beta = beta;
  result.pi = pi;
  result.psi = psi;
  for (const auto& key : result.occupied()) {
    result.emissions[key] = grid[static_cast<std::size_t>(key.first) * config.max_components +
                                 static_cast<std::size_t>(key.second)];
  }
  result.kappa = result.emissions.size();
  return result;
}

inline PartitionResult run_gibbs(const Bag& bag, const PartitionConfig& config) {
  return run_gibbs(bag.features, config);
}

// Posterior mean of the scene-change count over the post-burn-in sweeps.
inline double mean_scene_transitions(const PartitionResult& r) {
  if (r.transition_trace.size() <= r.burn_in) throw ArgumentError("no post-burn-in sweeps recorded");
  double total = 0.0;
  for (std::size_t i = r.burn_in; i < r.transition_trace.size(); ++i) total += static_cast<double>(r.transition_trace[i]);
  return total / static_cast<double>(r.transition_trace.size() - r.burn_in);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) throw FormatError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline nlohmann::json to_json(const PartitionResult& r) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& [key, params] : r.emissions) {
    comps.push_back({{"scene", key.first},
                     {"component", key.second},
                     {"mu", vector_to_json(params.mu)},
                     {"sigma", matrix_to_json(params.sigma)}});
  }
  return {{"z", r.z}, {"s", r.s}, {"kappa", r.kappa}, {"components", comps}, {"loglik_trace", r.loglik_trace},
          {"transition_trace", r.transition_trace}, {"burn_in", r.burn_in}};
}

// Restores assignments, emissions and trace. beta, pi and psi are not part
// of the file format and come back empty.
inline PartitionResult partition_from_json(const nlohmann::json& j) {
  PartitionResult r;
  try {
    r.z = j.at("z").get<std::vector<int>>();
    r.s = j.at("s").get<std::vector<int>>();
    r.kappa = j.at("kappa").get<std::size_t>();
    r.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    if (j.contains("transition_trace")) r.transition_trace = j.at("transition_trace").get<std::vector<std::size_t>>();
    if (j.contains("burn_in")) r.burn_in = j.at("burn_in").get<std::size_t>();
    for (const auto& c : j.at("components")) {
      r.emissions[{c.at("scene").get<int>(), c.at("component").get<int>()}] =
          GaussianParams{vector_from_json(c.at("mu")), matrix_from_json(c.at("sigma"))};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("partition json: ") + e.what());
  }
  if (r.z.size() != r.s.size()) throw FormatError("partition json: z and s lengths differ");
  for (const auto& key : r.occupied()) {
    if (!r.emissions.count(key)) throw FormatError("partition json: missing parameters for an occupied pair");
  }
  return r;
}

}  // namespace bnsvp
