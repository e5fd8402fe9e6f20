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
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnsvp/core_data.hpp"
#include "bnsvp/errors.hpp"
#include "bnsvp/metrics.hpp"
#include "bnsvp/partition.hpp"
#include "bnsvp/propagation.hpp"
#include "bnsvp/random.hpp"
#include "bnsvp/submodular.hpp"

namespace bnsvp {

enum class LossKind { kMaxMil, kTopK, kBnsvp };

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "max") return LossKind::kMaxMil;
  if (s == "topk") return LossKind::kTopK;
  if (s == "bnsvp") return LossKind::kBnsvp;
  throw ArgumentError("unknown loss '" + s + "' (expected max, topk or bnsvp)");
}

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kMaxMil: return "max";
    case LossKind::kTopK: return "topk";
    case LossKind::kBnsvp: return "bnsvp";
  }
  return "max";
}

// Logistic function kept strictly inside (0, 1).
inline double sigmoid(double t) {
  const double v = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  return std::clamp(v, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

// Logistic scorer on raw features, or on the concatenation of a
// feature-similarity branch and a temporal branch.
struct ScorerModel {
  Vector w;
  double b = 0.0;
  std::optional<PropagationLayer> feature_branch;
  std::optional<PropagationLayer> temporal_branch;
  std::size_t input_dim = 0;

  bool propagates() const { return feature_branch.has_value(); }

  static ScorerModel linear(std::size_t dim) {
    ScorerModel m;
    m.input_dim = dim;
    m.w = Vector::Zero(static_cast<Eigen::Index>(dim));
    return m;
  }

  // Both branch weights start at the identity.
  static ScorerModel with_propagation(std::size_t dim, std::optional<double> lengthscale = std::nullopt) {
    ScorerModel m;
    m.input_dim = dim;
    const auto d = static_cast<Eigen::Index>(dim);
    m.feature_branch = PropagationLayer{Branch::kFeatureSimilarity, Matrix::Identity(d, d), lengthscale};
    m.temporal_branch = PropagationLayer{Branch::kTemporal, Matrix::Identity(d, d), std::nullopt};
    m.w = Vector::Zero(2 * d);
    return m;
  }

  std::size_t fused_dim() const {
    if (!propagates()) return input_dim;
    return static_cast<std::size_t>(feature_branch->weight.cols() + temporal_branch->weight.cols());
  }

  std::size_t parameter_count() const {
    std::size_t c = static_cast<std::size_t>(w.size()) + 1;
    if (propagates()) c += static_cast<std::size_t>(feature_branch->weight.size() + temporal_branch->weight.size());
    return c;
  }

  // Flattened as w, b, then each branch weight in column-major order.
  Vector parameters() const {
    Vector p(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index o = 0;
    p.segment(o, w.size()) = w;
    o += w.size();
    p[o++] = b;
    if (propagates()) {
      for (const Matrix* m : {&feature_branch->weight, &temporal_branch->weight}) {
        p.segment(o, m->size()) = m->reshaped();
        o += m->size();
      }
    }
    return p;
  }

  void set_parameters(const Vector& p) {
    if (static_cast<std::size_t>(p.size()) != parameter_count()) throw ArgumentError("parameter vector has the wrong length");
    Eigen::Index o = 0;
    w = p.segment(o, w.size());
    o += w.size();
    b = p[o++];
    if (propagates()) {
      for (Matrix* m : {&feature_branch->weight, &temporal_branch->weight}) {
        m->reshaped() = p.segment(o, m->size());
        o += m->size();
      }
    }
  }

  void validate() const {
    if (static_cast<std::size_t>(w.size()) != fused_dim()) throw ArgumentError("weight length does not match the fused feature dim");
    if (!std::isfinite(b) || !w.allFinite()) throw ArgumentError("model parameters must be finite");
    if (feature_branch.has_value() != temporal_branch.has_value()) throw ArgumentError("propagation needs both branches");
    if (propagates()) {
      for (const PropagationLayer* l : {&*feature_branch, &*temporal_branch}) {
        if (static_cast<std::size_t>(l->weight.rows()) != input_dim) throw ArgumentError("branch weight rows must equal the input dim");
        if (!l->weight.allFinite()) throw ArgumentError("branch weights must be finite");
      }
      if (feature_branch->lengthscale && !(*feature_branch->lengthscale > 0.0)) throw ArgumentError("lengthscale must be positive");
    }
  }
};

// Per-bag quantities that do not depend on trainable weights.
struct BagInput {
  Matrix x;
  Matrix feature_ax;   // A_f X
  Matrix temporal_ax;  // A_t X
};

inline BagInput prepare_bag(const ScorerModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim) {
    throw ArgumentError("bag has dim " + std::to_string(x.cols()) + " but the model expects " + std::to_string(model.input_dim));
  }
  BagInput in{x, {}, {}};
  if (model.propagates()) {
    in.feature_ax = model.feature_branch->operator_for(x) * x;
    in.temporal_ax = model.temporal_branch->operator_for(x) * x;
  }
  return in;
}

inline Matrix representation(const ScorerModel& model, const BagInput& in) {
  if (!model.propagates()) return in.x;
  const Matrix& wf = model.feature_branch->weight;
  const Matrix& wt = model.temporal_branch->weight;
  Matrix h(in.x.rows(), wf.cols() + wt.cols());
  h.leftCols(wf.cols()) = in.feature_ax * wf;
  h.rightCols(wt.cols()) = in.temporal_ax * wt;
  return h;
}

inline std::vector<double> scores_from_representation(const ScorerModel& model, const Matrix& h) {
  const Vector logits = h * model.w;
  std::vector<double> s(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) s[static_cast<std::size_t>(i)] = sigmoid(logits[i] + model.b);
  return s;
}

inline std::vector<double> score_bag(const ScorerModel& model, const Matrix& x) {
  model.validate();
  return scores_from_representation(model, representation(model, prepare_bag(model, x)));
}

inline std::vector<double> score_bag(const ScorerModel& model, const Bag& bag) { return score_bag(model, bag.features); }

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

namespace detail {

inline void require_nonempty(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ArgumentError(std::string(what) + " scores are empty");
}

inline std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Indices of the k largest scores; ties go to the lower index.
inline std::vector<std::size_t> topk_indices(const std::vector<double>& v, std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(k);
  return idx;
}

inline double selected_mean(const std::vector<double>& v, const std::vector<std::size_t>& sel) {
  double sum = 0.0;
  for (std::size_t i : sel) sum += v[i];
  return sum / static_cast<double>(sel.size());
}

inline double hinge(double margin) { return margin > 0.0 ? margin : 0.0; }

}  // namespace detail

inline double max_mil_loss(const std::vector<double>& pos, const std::vector<double>& neg) {
  detail::require_nonempty(pos, "positive");
  detail::require_nonempty(neg, "negative");
  return detail::hinge(1.0 - pos[detail::argmax_lowest(pos)] + neg[detail::argmax_lowest(neg)]);
}

inline double topk_mil_loss(const std::vector<double>& pos, const std::vector<double>& neg, std::size_t k) {
  detail::require_nonempty(pos, "positive");
  detail::require_nonempty(neg, "negative");
  if (k < 1 || k > pos.size()) throw ArgumentError("k must lie in [1, " + std::to_string(pos.size()) + "]");
  const double mean = detail::selected_mean(pos, detail::topk_indices(pos, k));
  return detail::hinge(1.0 - mean + neg[detail::argmax_lowest(neg)]);
}

inline double representative_mil_loss(const std::vector<double>& pos, const RepresentativeSet& rep,
                                      const std::vector<double>& neg) {
  detail::require_nonempty(pos, "positive");
  detail::require_nonempty(neg, "negative");
  if (rep.indices.empty()) {
    throw DegenerateSelectionError("representative set is empty; lower the epsilon percentile");
  }
  for (std::size_t i : rep.indices) {
    if (i >= pos.size()) throw ArgumentError("representative index out of range");
  }
  return detail::hinge(1.0 - detail::selected_mean(pos, rep.indices) + neg[detail::argmax_lowest(neg)]);
}

// Which loss to apply and how the positive instances are chosen.
struct LossSpec {
  LossKind kind = LossKind::kMaxMil;
  std::size_t k = 1;
  double epsilon_percentile = 35.0;
  // Scene and component labels of the positive bag (bnsvp only).
  const std::vector<int>* scenes = nullptr;
  const std::vector<int>* components = nullptr;
  double l2 = 0.0;
  double smoothness = 0.0;  // sum of squared score differences, positive bag
  double sparsity = 0.0;    // sum of scores, positive bag
};

inline std::vector<std::size_t> select_positive(const std::vector<double>& pos, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::kMaxMil:
      return {detail::argmax_lowest(pos)};
    case LossKind::kTopK:
      if (spec.k < 1 || spec.k > pos.size()) throw ArgumentError("k must lie in [1, " + std::to_string(pos.size()) + "]");
      return detail::topk_indices(pos, spec.k);
    case LossKind::kBnsvp: {
      if (!spec.scenes || !spec.components) throw ArgumentError("bnsvp loss needs a partition of the positive bag");
      auto rep = greedy_representatives(*spec.scenes, *spec.components, pos, spec.epsilon_percentile);
      if (rep.indices.empty()) throw DegenerateSelectionError("representative set is empty; lower the epsilon percentile");
      return rep.indices;
    }
  }
  return {};
}

struct LossEvaluation {
  double mil_loss = 0.0;   // hinge term only
  double objective = 0.0;  // hinge plus every regularizer
  Vector gradient;         // over ScorerModel::parameters()
};

// Objective and its subgradient for one positive/negative pair. Max ties go
// to the lowest index and a hinge at exactly zero contributes nothing.
inline LossEvaluation loss_gradient(const ScorerModel& model, const BagInput& pos_in, const BagInput& neg_in,
                                    const LossSpec& spec) {
  const Matrix hp = representation(model, pos_in);
  const Matrix hn = representation(model, neg_in);
  const auto sp = scores_from_representation(model, hp);
  const auto sn = scores_from_representation(model, hn);
  const auto sel = select_positive(sp, spec);
  const std::size_t jn = detail::argmax_lowest(sn);

  const double margin = 1.0 - detail::selected_mean(sp, sel) + sn[jn];
  LossEvaluation out;
  out.mil_loss = detail::hinge(margin);

  Vector dsp = Vector::Zero(hp.rows());
  Vector dsn = Vector::Zero(hn.rows());
  if (margin > 0.0) {
    for (std::size_t i : sel) dsp[static_cast<Eigen::Index>(i)] -= 1.0 / static_cast<double>(sel.size());
    dsn[static_cast<Eigen::Index>(jn)] += 1.0;
  }
  double reg = spec.l2 * model.w.squaredNorm();
  if (spec.smoothness > 0.0) {
    for (std::size_t i = 1; i < sp.size(); ++i) {
      const double d = sp[i] - sp[i - 1];
      reg += spec.smoothness * d * d;
      dsp[static_cast<Eigen::Index>(i)] += 2.0 * spec.smoothness * d;
      dsp[static_cast<Eigen::Index>(i - 1)] -= 2.0 * spec.smoothness * d;
    }
  }
  if (spec.sparsity > 0.0) {
    for (std::size_t i = 0; i < sp.size(); ++i) {
      reg += spec.sparsity * sp[i];
      dsp[static_cast<Eigen::Index>(i)] += spec.sparsity;
    }
  }
  out.objective = out.mil_loss + reg;

  Vector gp(hp.rows());
  for (Eigen::Index i = 0; i < gp.size(); ++i) gp[i] = dsp[i] * sp[static_cast<std::size_t>(i)] * (1.0 - sp[static_cast<std::size_t>(i)]);
  Vector gn(hn.rows());
  for (Eigen::Index i = 0; i < gn.size(); ++i) gn[i] = dsn[i] * sn[static_cast<std::size_t>(i)] * (1.0 - sn[static_cast<std::size_t>(i)]);

  out.gradient = Vector::Zero(static_cast<Eigen::Index>(model.parameter_count()));
  Eigen::Index o = 0;
  out.gradient.segment(o, model.w.size()) = hp.transpose() * gp + hn.transpose() * gn + 2.0 * spec.l2 * model.w;
  o += model.w.size();
  out.gradient[o++] = gp.sum() + gn.sum();
  if (model.propagates()) {
    const Eigen::Index df = model.feature_branch->weight.cols();
    const Eigen::Index dt = model.temporal_branch->weight.cols();
    const Vector wf = model.w.head(df);
    const Vector wt = model.w.tail(dt);
    const Matrix gwf = pos_in.feature_ax.transpose() * gp * wf.transpose() + neg_in.feature_ax.transpose() * gn * wf.transpose();
    const Matrix gwt = pos_in.temporal_ax.transpose() * gp * wt.transpose() + neg_in.temporal_ax.transpose() * gn * wt.transpose();
    out.gradient.segment(o, gwf.size()) = gwf.reshaped();
    o += gwf.size();
    out.gradient.segment(o, gwt.size()) = gwt.reshaped();
  }
  return out;
}

// True when the selection, the negative argmax or the hinge sits within
// `margin` of switching, where the loss is not differentiable.
inline bool near_kink(const ScorerModel& model, const BagInput& pos_in, const BagInput& neg_in, const LossSpec& spec,
                      double margin = 1e-4) {
  const auto sp = scores_from_representation(model, representation(model, pos_in));
  const auto sn = scores_from_representation(model, representation(model, neg_in));
  auto gap_to_best = [&](const std::vector<double>& v) {
    std::vector<double> sorted = v;
    std::sort(sorted.rbegin(), sorted.rend());
    return sorted.size() < 2 ? std::numeric_limits<double>::infinity() : sorted[0] - sorted[1];
  };
  if (gap_to_best(sn) < margin) return true;
  const auto sel = select_positive(sp, spec);
  if (std::abs(1.0 - detail::selected_mean(sp, sel) + sn[detail::argmax_lowest(sn)]) < margin) return true;
  switch (spec.kind) {
    case LossKind::kMaxMil:
      return gap_to_best(sp) < margin;
    case LossKind::kTopK: {
      if (spec.k >= sp.size()) return false;
      std::vector<double> sorted = sp;
      std::sort(sorted.rbegin(), sorted.rend());
      return sorted[spec.k - 1] - sorted[spec.k] < margin;
    }
    case LossKind::kBnsvp: {
      const double eps = nearest_rank_percentile(sp, spec.epsilon_percentile);
      for (const auto& [key, idx] : detail::group_segments(*spec.scenes, *spec.components)) {
        std::vector<double> v;
        for (std::size_t i : idx) v.push_back(sp[i]);
        if (gap_to_best(v) < margin) return true;
        const double best = *std::max_element(v.begin(), v.end());
        // Any segment can move the percentile, so only the winners' distance
        // to it matters for a locally constant selection.
        if (best != eps && std::abs(best - eps) < margin) return true;
      }
      return false;
    }
  }
  return false;
}

// Worst relative error between the analytic gradient and central
// differences. The denominator is floored at `floor` so that parameters with
// a near-zero gradient are compared on an absolute scale.
inline double finite_difference_check(const ScorerModel& model, const BagInput& pos_in, const BagInput& neg_in,
                                      const LossSpec& spec, double step = 1e-5, double floor = 1e-4) {
  const Vector analytic = loss_gradient(model, pos_in, neg_in, spec).gradient;
  const Vector p0 = model.parameters();
  ScorerModel probe = model;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Vector p = p0;
    p[i] = p0[i] + step;
    probe.set_parameters(p);
    const double up = loss_gradient(probe, pos_in, neg_in, spec).objective;
    p[i] = p0[i] - step;
    probe.set_parameters(p);
    const double down = loss_gradient(probe, pos_in, neg_in, spec).objective;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  LossKind loss_kind = LossKind::kMaxMil;
  std::size_t k = 1;
  double learning_rate = 0.001;
  double l2_coeff = 0.001;
  std::size_t epochs = 100;
  // Unset keeps the initial partitions for the whole run.
  std::optional<std::size_t> partition_refresh_every;
  double epsilon_percentile = 35.0;
  PartitionConfig partition_config;
  std::uint64_t seed = 0;
  bool use_propagation = false;
  double smoothness = 0.0;
  double sparsity = 0.0;
  double init_scale = 0.01;  // std of the initial logistic weights

  void validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (!(l2_coeff >= 0.0) || !(smoothness >= 0.0) || !(sparsity >= 0.0)) throw ArgumentError("regularization coefficients must be nonnegative");
    if (epochs < 1) throw ArgumentError("epochs must be positive");
    if (loss_kind == LossKind::kTopK && k < 1) throw ArgumentError("k must be positive");
    if (partition_refresh_every && *partition_refresh_every < 1) throw ArgumentError("partition refresh interval must be positive");
    if (!(epsilon_percentile >= 0.0 && epsilon_percentile <= 100.0)) throw ArgumentError("epsilon percentile must lie in [0, 100]");
    if (!(init_scale >= 0.0)) throw ArgumentError("init scale must be nonnegative");
    partition_config.validate();
  }
};

struct TrainingLog {
  std::vector<double> mean_loss;  // one entry per epoch

  std::string to_csv() const {
    std::string out = "epoch,mean_loss\n";
    for (std::size_t e = 0; e < mean_loss.size(); ++e) {
      out += std::to_string(e + 1) + "," + detail::format_double(mean_loss[e]) + "\n";
    }
    return out;
  }
};

struct TrainResult {
  ScorerModel model;
  TrainingLog log;
  std::map<std::string, PartitionResult> partitions;  // by positive bag id
};

// Partition of a bag on the model's current representation.
inline PartitionResult partition_bag(const ScorerModel& model, const BagInput& in, PartitionConfig config,
                                     std::uint64_t stream) {
  config.seed = mix_seed(config.seed, stream);
  return run_gibbs(representation(model, in), config);
}

inline TrainResult train(const Dataset& data, const TrainConfig& config,
                         std::map<std::string, PartitionResult> partitions = {}) {
  config.validate();
  validate_dataset(data);
  std::vector<std::size_t> pos_ids, neg_ids;
  for (std::size_t i = 0; i < data.bags.size(); ++i) {
    (data.bags[i].label == BagLabel::kAbnormal ? pos_ids : neg_ids).push_back(i);
  }
  if (pos_ids.empty() || neg_ids.empty()) throw ArgumentError("training needs at least one positive and one negative bag");
  const std::size_t dim = static_cast<std::size_t>(data.bags.front().features.cols());

  ScorerModel model = config.use_propagation ? ScorerModel::with_propagation(dim) : ScorerModel::linear(dim);
  Rng init_rng(mix_seed(config.seed, 1));
  for (Eigen::Index i = 0; i < model.w.size(); ++i) model.w[i] = config.init_scale * init_rng.normal();

  std::vector<BagInput> inputs;
  inputs.reserve(data.bags.size());
  for (const auto& bag : data.bags) inputs.push_back(prepare_bag(model, bag.features));

  const bool bnsvp = config.loss_kind == LossKind::kBnsvp;
  auto refresh = [&](std::size_t round) {
    for (std::size_t p : pos_ids) {
      partitions[data.bags[p].id] = partition_bag(model, inputs[p], config.partition_config, (round << 32) ^ p);
    }
  };
  if (bnsvp) {
    bool missing = false;
    for (std::size_t p : pos_ids) {
      const auto it = partitions.find(data.bags[p].id);
      if (it == partitions.end()) {
        missing = true;
      } else if (it->second.z.size() != static_cast<std::size_t>(data.bags[p].features.rows())) {
        throw ArgumentError("partition of bag '" + data.bags[p].id + "' does not match its segment count");
      }
    }
    if (missing) refresh(0);
  }

  LossSpec spec;
  spec.kind = config.loss_kind;
  spec.k = config.k;
  spec.epsilon_percentile = config.epsilon_percentile;
  spec.l2 = config.l2_coeff;
  spec.smoothness = config.smoothness;
  spec.sparsity = config.sparsity;

  Rng order_rng(mix_seed(config.seed, 2));
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (bnsvp && config.partition_refresh_every && epoch > 0 && epoch % *config.partition_refresh_every == 0) {
      refresh(epoch / *config.partition_refresh_every);
    }
    std::vector<std::size_t> pos_order = pos_ids;
    std::vector<std::size_t> neg_order = neg_ids;
    order_rng.shuffle(pos_order);
    order_rng.shuffle(neg_order);
    double total = 0.0;
    for (std::size_t step = 0; step < pos_order.size(); ++step) {
      const std::size_t p = pos_order[step];
      const std::size_t q = neg_order[step % neg_order.size()];
      if (bnsvp) {
        const auto& part = partitions.at(data.bags[p].id);
        spec.scenes = &part.z;
        spec.components = &part.s;
      }
      const auto eval = loss_gradient(model, inputs[p], inputs[q], spec);
      total += eval.mil_loss;
      model.set_parameters(model.parameters() - config.learning_rate * eval.gradient);
    }
    result.log.mean_loss.push_back(total / static_cast<double>(pos_order.size()));
  }
  result.model = std::move(model);
  result.partitions = std::move(partitions);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ScorerModel& m) {
  nlohmann::json prop = nullptr;
  if (m.propagates()) {
    prop = {{"feature", {{"weight", matrix_to_json(m.feature_branch->weight)},
                         {"lengthscale", m.feature_branch->lengthscale ? nlohmann::json(*m.feature_branch->lengthscale)
                                                                       : nlohmann::json(nullptr)}}},
            {"temporal", {{"weight", matrix_to_json(m.temporal_branch->weight)}}}};
  }
  return {{"w", vector_to_json(m.w)}, {"b", m.b}, {"input_dim", m.input_dim}, {"propagation", prop}};
}

inline ScorerModel model_from_json(const nlohmann::json& j) {
  ScorerModel m;
  try {
    m.w = vector_from_json(j.at("w"));
    m.b = j.at("b").get<double>();
    const auto& prop = j.at("propagation");
    if (prop.is_null()) {
      m.input_dim = j.contains("input_dim") ? j.at("input_dim").get<std::size_t>() : static_cast<std::size_t>(m.w.size());
    } else {
      std::optional<double> l;
      if (!prop.at("feature").at("lengthscale").is_null()) l = prop.at("feature").at("lengthscale").get<double>();
      m.feature_branch = PropagationLayer{Branch::kFeatureSimilarity, matrix_from_json(prop.at("feature").at("weight")), l};
      m.temporal_branch = PropagationLayer{Branch::kTemporal, matrix_from_json(prop.at("temporal").at("weight")), std::nullopt};
      m.input_dim = static_cast<std::size_t>(m.feature_branch->weight.rows());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model json: ") + e.what());
  }
  try {
    m.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("model json: ") + e.what());
  }
  return m;
}

}  // namespace bnsvp
