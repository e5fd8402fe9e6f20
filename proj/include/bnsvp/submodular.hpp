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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnsvp/core_data.hpp"
#include "bnsvp/errors.hpp"
#include "bnsvp/linalg.hpp"
#include "bnsvp/partition.hpp"

namespace bnsvp {

// Dense n x n similarity. Entries are nonnegative and vanish across
// (scene, component) pairs.
struct SimilarityMatrix {
  Matrix values;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
};

// The same similarity stored one block per occupied component.
struct BlockSimilarity {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> members;  // segment indices, ascending
  std::vector<Matrix> blocks;

  SimilarityMatrix to_dense() const {
    SimilarityMatrix s{Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& m = members[b];
      for (std::size_t a = 0; a < m.size(); ++a) {
        for (std::size_t c = 0; c < m.size(); ++c) {
          s.values(static_cast<Eigen::Index>(m[a]), static_cast<Eigen::Index>(m[c])) =
              blocks[b](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
        }
      }
    }
    return s;
  }
};

namespace detail {

inline std::map<ComponentKey, std::vector<std::size_t>> group_segments(const std::vector<int>& z,
                                                                      const std::vector<int>& s) {
  if (z.size() != s.size()) throw ArgumentError("scene and component assignments differ in length");
  std::map<ComponentKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < z.size(); ++i) groups[{z[i], s[i]}].push_back(i);
  return groups;
}

inline Eigen::LLT<Matrix> component_factor(const PartitionResult& partition, const ComponentKey& key) {
  const auto it = partition.emissions.find(key);
  if (it == partition.emissions.end()) {
    throw ArgumentError("no covariance for scene " + std::to_string(key.first) + " component " +
                        std::to_string(key.second));
  }
  return robust_cholesky(it->second.sigma, "component covariance");
}

inline void check_indices(std::size_t n, const std::vector<std::size_t>& c) {
  for (std::size_t j : c) {
    if (j >= n) throw ArgumentError("index " + std::to_string(j) + " out of range for " + std::to_string(n) + " segments");
  }
}

}  // namespace detail

inline BlockSimilarity build_block_similarity(const Matrix& features, const PartitionResult& partition) {
  const std::size_t n = static_cast<std::size_t>(features.rows());
  if (partition.z.size() != n) throw ArgumentError("partition does not cover every segment");
  BlockSimilarity out;
  out.n = n;
  for (const auto& [key, idx] : detail::group_segments(partition.z, partition.s)) {
    const auto llt = detail::component_factor(partition, key);
    Matrix xb(static_cast<Eigen::Index>(idx.size()), features.cols());
    for (std::size_t a = 0; a < idx.size(); ++a) xb.row(static_cast<Eigen::Index>(a)) = features.row(static_cast<Eigen::Index>(idx[a]));
    const Matrix solved = llt.solve(xb.transpose());  // M x m
    Matrix block = xb * solved;
    block = symmetrize(block).cwiseMax(0.0);
    out.members.push_back(idx);
    out.blocks.push_back(std::move(block));
  }
  return out;
}

inline SimilarityMatrix build_similarity(const Matrix& features, const PartitionResult& partition) {
  return build_block_similarity(features, partition).to_dense();
}

inline double facility_location_value(const SimilarityMatrix& s, const std::vector<std::size_t>& c) {
  const std::size_t n = s.size();
  detail::check_indices(n, c);
  if (c.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    for (std::size_t j : c) best = std::max(best, s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    total += best;
  }
  return total;
}

// Linear in the bag size: each row only looks at chosen indices inside its
// own block.
inline double facility_location_value(const BlockSimilarity& s, const std::vector<std::size_t>& c) {
  detail::check_indices(s.n, c);
  std::vector<char> chosen(s.n, 0);
  for (std::size_t j : c) chosen[j] = 1;
  double total = 0.0;
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const auto& m = s.members[b];
    for (std::size_t a = 0; a < m.size(); ++a) {
      double best = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (chosen[m[k]]) best = std::max(best, s.blocks[b](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)));
      }
      total += best;
    }
  }
  return total;
}

inline double marginal_gain(const SimilarityMatrix& s, const std::vector<std::size_t>& c, std::size_t j) {
  detail::check_indices(s.size(), c);
  detail::check_indices(s.size(), {j});
  if (std::find(c.begin(), c.end(), j) != c.end()) throw ArgumentError("index already in the set");
  double gain = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double best = 0.0;
    for (std::size_t k : c) best = std::max(best, s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    gain += std::max(0.0, s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - best);
  }
  return gain;
}

struct Winner {
  int scene = 0;
  int component = 0;
  std::size_t index = 0;
  double score = 0.0;
};

struct RepresentativeSet {
  std::vector<std::size_t> indices;  // ascending
  std::vector<Winner> winners;       // one per occupied pair, kept or not
  double epsilon = 0.0;
};

// Nearest-rank percentile: ascending sort, 1-based rank ceil(p/100 * n),
// clamped to [1, n].
inline double nearest_rank_percentile(std::vector<double> values, double percentile) {
  if (values.empty()) throw ArgumentError("percentile of an empty vector");
  if (!(percentile >= 0.0 && percentile <= 100.0)) throw ArgumentError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

inline RepresentativeSet greedy_representatives(const std::vector<int>& z, const std::vector<int>& s,
                                                const std::vector<double>& scores, double epsilon_percentile) {
  if (z.empty()) throw ArgumentError("empty partition");
  if (scores.size() != z.size()) throw ArgumentError("scores length differs from the partition");
  RepresentativeSet rep;
  rep.epsilon = nearest_rank_percentile(scores, epsilon_percentile);
  for (const auto& [key, idx] : detail::group_segments(z, s)) {
    std::size_t best = idx.front();
    for (std::size_t i : idx) {
      if (scores[i] > scores[best]) best = i;
    }
    rep.winners.push_back({key.first, key.second, best, scores[best]});
    if (scores[best] >= rep.epsilon) rep.indices.push_back(best);
  }
  std::sort(rep.indices.begin(), rep.indices.end());
  return rep;
}

inline RepresentativeSet greedy_representatives(const PartitionResult& partition, const std::vector<double>& scores,
                                                double epsilon_percentile) {
  return greedy_representatives(partition.z, partition.s, scores, epsilon_percentile);
}

struct SubsetValue {
  std::vector<std::size_t> indices;
  double value = 0.0;
};

// Exhaustive search over subsets of size <= kappa_limit. Subsets are visited
// in lexicographic order and only strict improvements replace the incumbent,
// so ties resolve to the lexicographically smallest subset.
inline SubsetValue brute_force_max(const SimilarityMatrix& s, std::size_t kappa_limit) {
  const std::size_t n = s.size();
  if (n > 20) throw ArgumentError("brute force is limited to 20 segments; use greedy_representatives");
  if (kappa_limit < 1) throw ArgumentError("kappa_limit must be positive");
  SubsetValue best{{}, 0.0};
  std::vector<std::size_t> current;
  std::vector<double> cover(n, 0.0);

  auto visit = [&](auto&& self, std::size_t start, double value) -> void {
    if (value > best.value) best = {current, value};
    if (current.size() == kappa_limit) return;
    for (std::size_t j = start; j < n; ++j) {
      std::vector<double> saved = cover;
      double next = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cover[i] = std::max(cover[i], s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        next += cover[i];
      }
      current.push_back(j);
      self(self, j + 1, next);
      current.pop_back();
      cover = std::move(saved);
    }
  };
  visit(visit, 0, 0.0);
  return best;
}

inline double diversified_objective(double mil_loss_value, const SimilarityMatrix& s, const std::vector<std::size_t>& c,
                                    double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("lambda must be nonnegative");
  return mil_loss_value - lambda * facility_location_value(s, c);
}

inline nlohmann::json to_json(const RepresentativeSet& r) {
  nlohmann::json winners = nlohmann::json::array();
  for (const auto& w : r.winners) {
    winners.push_back({{"scene", w.scene}, {"component", w.component}, {"index", w.index}, {"score", w.score}});
  }
  return {{"epsilon", r.epsilon}, {"indices", r.indices}, {"winners", winners}};
}

inline RepresentativeSet representative_set_from_json(const nlohmann::json& j) {
  RepresentativeSet r;
  try {
    r.epsilon = j.at("epsilon").get<double>();
    r.indices = j.at("indices").get<std::vector<std::size_t>>();
    for (const auto& w : j.at("winners")) {
      r.winners.push_back({w.at("scene").get<int>(), w.at("component").get<int>(), w.at("index").get<std::size_t>(),
                           w.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("representative set json: ") + e.what());
  }
  return r;
}

}  // namespace bnsvp
