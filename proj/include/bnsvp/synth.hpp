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

// Seeded synthetic bags with planted scene structure.
//
// Every generator places its Gaussian centers on a fixed geometry that
// depends only on (dim, mean_separation, baseline), so datasets built with
// different seeds (e.g. a training and a test split) share the same scenes
// and anomaly modes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "bnsvp/core_data.hpp"
#include "bnsvp/errors.hpp"
#include "bnsvp/random.hpp"

namespace bnsvp {

struct ScenarioConfig {
  std::size_t n_bags_pos = 20;
  std::size_t n_bags_neg = 20;
  std::size_t n_segments = kDefaultSegments;
  std::size_t dim = 8;
  std::size_t n_scenes = 3;
  std::size_t components_per_scene = 2;
  std::size_t anomaly_modes = 1;
  // Index of the first anomaly center; lets separate datasets use
  // different anomaly types.
  std::size_t anomaly_mode_offset = 0;
  double anomaly_fraction = 0.2;
  double mean_separation = 6.0;
  // Shared offset added to every non-outlier feature.
  double baseline = 3.0;
  double self_transition = 0.9;
  std::uint64_t seed = 0;
  std::string id_prefix;

  std::size_t block_length() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(anomaly_fraction * static_cast<double>(n_segments))));
  }

  std::size_t total_centers() const {
    return n_scenes * components_per_scene + anomaly_mode_offset + anomaly_modes;
  }

  void validate() const {
    if (n_segments < 1 || dim < 1 || n_scenes < 1 || components_per_scene < 1 || anomaly_modes < 1) {
      throw ArgumentError("segments, dim, scenes, components and anomaly modes must be positive");
    }
    if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
      throw ArgumentError("anomaly_fraction must lie in (0, 1)");
    }
    if (n_bags_pos > 0 && anomaly_fraction * static_cast<double>(n_segments) < 0.5) {
      throw ArgumentError("anomaly_fraction * n_segments must be at least 1 for positive bags");
    }
    if (n_bags_pos > 0 && anomaly_modes * block_length() > n_segments) {
      throw ArgumentError("anomaly blocks do not fit: " + std::to_string(anomaly_modes) + " x " +
                          std::to_string(block_length()) + " > " + std::to_string(n_segments) + " segments");
    }
    if (!(mean_separation >= 0.0)) throw ArgumentError("mean_separation must be nonnegative");
    if (!(self_transition >= 0.0 && self_transition <= 1.0)) throw ArgumentError("self_transition must lie in [0, 1]");
    if (total_centers() > 2 * dim) {
      throw ArgumentError("need dim >= " + std::to_string((total_centers() + 1) / 2) + " to place " +
                          std::to_string(total_centers()) + " separated centers");
    }
  }
};

// Center number c sits at baseline + (sep / sqrt 2) * (+/- e_{c mod dim}),
// so any two centers are at least `sep` apart.
inline Vector planted_center(std::size_t c, std::size_t dim, double sep, double baseline) {
  Vector v = Vector::Constant(static_cast<Eigen::Index>(dim), baseline);
  const double sign = (c / dim) % 2 == 0 ? 1.0 : -1.0;
  v[static_cast<Eigen::Index>(c % dim)] += sign * sep / std::sqrt(2.0);
  return v;
}

inline Vector scene_center(const ScenarioConfig& cfg, std::size_t scene, std::size_t component) {
  return planted_center(scene * cfg.components_per_scene + component, cfg.dim, cfg.mean_separation, cfg.baseline);
}

inline Vector anomaly_center(const ScenarioConfig& cfg, std::size_t mode) {
  return planted_center(cfg.n_scenes * cfg.components_per_scene + cfg.anomaly_mode_offset + mode, cfg.dim,
                        cfg.mean_separation, cfg.baseline);
}

// Planted ground truth for one bag.
struct PlantedBag {
  Bag bag;
  std::vector<int> scenes;      // scene of each segment before anomaly overwrite
  std::vector<int> components;  // component within the scene
  std::vector<int> anomaly_mode;  // -1 for normal segments
};

inline PlantedBag generate_planted_bag(const ScenarioConfig& cfg, bool abnormal, const std::string& id, Rng& rng) {
  const std::size_t n = cfg.n_segments;
  PlantedBag out;
  out.bag.id = id;
  out.bag.label = abnormal ? BagLabel::kAbnormal : BagLabel::kNormal;
  out.bag.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.dim));
  out.scenes.resize(n);
  out.components.resize(n);
  out.anomaly_mode.assign(n, -1);
  std::vector<int> labels(n, 0);

  std::size_t scene = rng.uniform_index(cfg.n_scenes);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && cfg.n_scenes > 1 && !rng.bernoulli(cfg.self_transition)) {
      const std::size_t hop = 1 + rng.uniform_index(cfg.n_scenes - 1);
      scene = (scene + hop) % cfg.n_scenes;
    }
    const std::size_t comp = rng.uniform_index(cfg.components_per_scene);
    out.scenes[i] = static_cast<int>(scene);
    out.components[i] = static_cast<int>(comp);
    out.bag.features.row(static_cast<Eigen::Index>(i)) =
        (scene_center(cfg, scene, comp) + rng.normal_vector(static_cast<Eigen::Index>(cfg.dim))).transpose();
  }

  if (abnormal) {
    // One contiguous block per mode, each inside its own equal region.
    const std::size_t len = cfg.block_length();
    const std::size_t region = n / cfg.anomaly_modes;
    for (std::size_t a = 0; a < cfg.anomaly_modes; ++a) {
      const std::size_t start = a * region + rng.uniform_index(region - len + 1);
      for (std::size_t i = start; i < start + len; ++i) {
        out.bag.features.row(static_cast<Eigen::Index>(i)) =
            (anomaly_center(cfg, a) + rng.normal_vector(static_cast<Eigen::Index>(cfg.dim))).transpose();
        labels[i] = 1;
        out.anomaly_mode[i] = static_cast<int>(a);
      }
    }
  }
  out.bag.segment_labels = std::move(labels);
  return out;
}

// Positive bags first, then negative bags. Ids are <prefix>pos_NNNN and
// <prefix>neg_NNNN.
inline std::vector<PlantedBag> generate_planted_truth(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<PlantedBag> out;
  char buf[32];
  for (std::size_t b = 0; b < cfg.n_bags_pos; ++b) {
    std::snprintf(buf, sizeof buf, "pos_%04zu", b);
    out.push_back(generate_planted_bag(cfg, true, cfg.id_prefix + buf, rng));
  }
  for (std::size_t b = 0; b < cfg.n_bags_neg; ++b) {
    std::snprintf(buf, sizeof buf, "neg_%04zu", b);
    out.push_back(generate_planted_bag(cfg, false, cfg.id_prefix + buf, rng));
  }
  return out;
}

inline Dataset generate_planted(const ScenarioConfig& cfg) {
  Dataset ds;
  ds.name = cfg.id_prefix.empty() ? "planted" : cfg.id_prefix;
  for (auto& p : generate_planted_truth(cfg)) ds.bags.push_back(std::move(p.bag));
  return ds;
}

// Replaces `count` segments, drawn uniformly without replacement from the
// abnormal bags, with standard normal vectors. Labels are left as they are.
inline Dataset inject_outliers(const Dataset& ds, std::size_t count, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, Eigen::Index>> pool;
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    if (!ds.bags[b].abnormal()) continue;
    for (Eigen::Index i = 0; i < ds.bags[b].segments(); ++i) pool.emplace_back(b, i);
  }
  if (count > pool.size()) {
    throw ArgumentError("cannot inject " + std::to_string(count) + " outliers into " + std::to_string(pool.size()) +
                        " abnormal segments");
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` entries are the sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
  }
  Dataset out = ds;
  for (std::size_t i = 0; i < count; ++i) {
    auto& bag = out.bags[pool[i].first];
    bag.features.row(pool[i].second) = rng.normal_vector(bag.dim()).transpose();
  }
  return out;
}

// Builds bags by concatenating three videos and re-segmenting the result.
// Abnormal bags take one abnormal video from each of three distinct modes;
// normal bags take three normal videos from the pooled normal videos. A
// re-segmented row is labeled abnormal when any clip averaged into it is.
inline Dataset make_multimodal_bags(const std::vector<Dataset>& mode_datasets, std::size_t bags_pos,
                                    std::size_t bags_neg, std::uint64_t seed,
                                    std::size_t n_segments = kDefaultSegments, const std::string& id_prefix = "") {
  constexpr std::size_t kModesPerBag = 3;
  std::vector<std::size_t> abnormal_modes;
  std::vector<std::vector<const Bag*>> abnormal(mode_datasets.size());
  std::vector<const Bag*> normal;
  for (std::size_t m = 0; m < mode_datasets.size(); ++m) {
    for (const auto& bag : mode_datasets[m].bags) {
      if (bag.abnormal()) abnormal[m].push_back(&bag);
      else normal.push_back(&bag);
    }
    if (!abnormal[m].empty()) abnormal_modes.push_back(m);
  }
  if (abnormal_modes.size() < kModesPerBag) {
    throw ArgumentError("multimodal bags need at least 3 modes with abnormal videos, got " +
                        std::to_string(abnormal_modes.size()));
  }
  if (bags_neg > 0 && normal.empty()) throw ArgumentError("no normal videos available for normal bags");

  Rng rng(seed);
  auto assemble = [&](const std::vector<const Bag*>& parts, const std::string& id, BagLabel label) {
    Eigen::Index rows = 0;
    for (const Bag* p : parts) rows += p->segments();
    Matrix clips(rows, parts.front()->dim());
    std::vector<int> clip_labels;
    Eigen::Index r = 0;
    for (const Bag* p : parts) {
      clips.middleRows(r, p->segments()) = p->features;
      r += p->segments();
      if (p->segment_labels) {
        clip_labels.insert(clip_labels.end(), p->segment_labels->begin(), p->segment_labels->end());
      } else {
        clip_labels.insert(clip_labels.end(), static_cast<std::size_t>(p->segments()), 0);
      }
    }
    Bag bag;
    bag.id = id;
    bag.label = label;
    bag.features = segment_video(clips, n_segments);
    std::vector<int> labels(n_segments, 0);
    for (std::size_t k = 0; k < n_segments; ++k) {
      const auto [lo, hi] = segment_group(static_cast<std::size_t>(rows), n_segments, k);
      for (std::size_t c = lo; c < hi; ++c) labels[k] = std::max(labels[k], clip_labels[c]);
    }
    bag.segment_labels = std::move(labels);
    return bag;
  };

  Dataset out;
  out.name = id_prefix.empty() ? "multimodal" : id_prefix;
  char buf[32];
  for (std::size_t b = 0; b < bags_pos; ++b) {
    std::vector<std::size_t> modes = abnormal_modes;
    rng.shuffle(modes);
    std::vector<const Bag*> parts;
    for (std::size_t i = 0; i < kModesPerBag; ++i) {
      const auto& choices = abnormal[modes[i]];
      parts.push_back(choices[rng.uniform_index(choices.size())]);
    }
    std::snprintf(buf, sizeof buf, "pos_%04zu", b);
    out.bags.push_back(assemble(parts, id_prefix + buf, BagLabel::kAbnormal));
  }
  for (std::size_t b = 0; b < bags_neg; ++b) {
    std::vector<const Bag*> parts;
    for (std::size_t i = 0; i < kModesPerBag; ++i) parts.push_back(normal[rng.uniform_index(normal.size())]);
    std::snprintf(buf, sizeof buf, "neg_%04zu", b);
    out.bags.push_back(assemble(parts, id_prefix + buf, BagLabel::kNormal));
  }
  return out;
}

// Per-mode source datasets for make_multimodal_bags: mode m places its
// anomaly block at anomaly center m.
inline std::vector<Dataset> generate_mode_datasets(const ScenarioConfig& base, std::size_t n_modes,
                                                   std::size_t videos_pos, std::size_t videos_neg) {
  std::vector<Dataset> modes;
  for (std::size_t m = 0; m < n_modes; ++m) {
    ScenarioConfig cfg = base;
    cfg.anomaly_modes = 1;
    cfg.anomaly_mode_offset = m;
    cfg.n_bags_pos = videos_pos;
    cfg.n_bags_neg = videos_neg;
    cfg.seed = mix_seed(base.seed, m);
    cfg.id_prefix = base.id_prefix + "mode" + std::to_string(m) + "_";
    modes.push_back(generate_planted(cfg));
  }
  return modes;
}

}  // namespace bnsvp
