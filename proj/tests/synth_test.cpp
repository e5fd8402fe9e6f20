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

#include <functional>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "bnsvp/metrics.hpp"
#include "bnsvp/mil.hpp"
#include "bnsvp/synth.hpp"

namespace bnsvp {
namespace {

std::size_t dataset_hash(const Dataset& ds) {
  std::string bytes;
  for (const auto& b : ds.bags) {
    bytes += b.id + encode_features(b.features);
    if (b.segment_labels) {
      for (int l : *b.segment_labels) bytes += static_cast<char>('0' + l);
    }
  }
  return std::hash<std::string>{}(bytes);
}

ScenarioConfig small_config(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n_bags_pos = 4;
  cfg.n_bags_neg = 4;
  cfg.seed = seed;
  return cfg;
}

TEST(Planted, DeterministicAndSeedSensitive) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = generate_planted(small_config(seed));
    EXPECT_EQ(dataset_hash(a), dataset_hash(generate_planted(small_config(seed))));
    EXPECT_NE(dataset_hash(a), dataset_hash(generate_planted(small_config(seed + 100))));
  }
}

TEST(Planted, MilLabelInvariants) {
  const auto ds = generate_planted(small_config(1));
  ASSERT_EQ(ds.bags.size(), 8u);
  validate_dataset(ds);
  for (const auto& b : ds.bags) {
    EXPECT_EQ(b.segments(), 32);
    EXPECT_EQ(b.dim(), 8);
    int ones = 0;
    for (int l : *b.segment_labels) ones += l;
    if (b.abnormal()) EXPECT_GE(ones, 1) << b.id;
    else EXPECT_EQ(ones, 0) << b.id;
  }
}

TEST(Planted, NegativeOnly) {
  ScenarioConfig cfg = small_config(2);
  cfg.n_bags_pos = 0;
  for (const auto& b : generate_planted(cfg).bags) {
    EXPECT_FALSE(b.abnormal());
    for (int l : *b.segment_labels) EXPECT_EQ(l, 0);
  }
}

TEST(Planted, ThreeDisjointAnomalyBlocks) {
  ScenarioConfig cfg = small_config(3);
  cfg.anomaly_modes = 3;
  cfg.anomaly_fraction = 0.1;
  for (const auto& pb : generate_planted_truth(cfg)) {
    if (!pb.bag.abnormal()) continue;
    std::set<int> modes;
    int runs = 0;
    for (std::size_t i = 0; i < pb.anomaly_mode.size(); ++i) {
      if (pb.anomaly_mode[i] >= 0) {
        modes.insert(pb.anomaly_mode[i]);
        if (i == 0 || pb.anomaly_mode[i - 1] != pb.anomaly_mode[i]) ++runs;
      }
    }
    EXPECT_EQ(modes, (std::set<int>{0, 1, 2}));
    EXPECT_EQ(runs, 3);
  }
}

TEST(Planted, ScenesAreSticky) {
  ScenarioConfig cfg = small_config(4);
  cfg.n_segments = 400;
  cfg.n_bags_pos = 0;
  cfg.n_bags_neg = 1;
  const auto pb = generate_planted_truth(cfg).front();
  int changes = 0;
  for (std::size_t i = 1; i < pb.scenes.size(); ++i) changes += pb.scenes[i] != pb.scenes[i - 1];
  EXPECT_NEAR(changes / 399.0, 0.1, 0.05);
}

TEST(Planted, InfeasibleConfigs) {
  ScenarioConfig cfg = small_config(0);
  cfg.anomaly_fraction = 0.01;
  EXPECT_THROW(generate_planted(cfg), ArgumentError);
  cfg = small_config(0);
  cfg.anomaly_modes = 6;
  cfg.anomaly_fraction = 0.3;
  EXPECT_THROW(generate_planted(cfg), ArgumentError);
  cfg = small_config(0);
  cfg.dim = 2;
  EXPECT_THROW(generate_planted(cfg), ArgumentError);
  cfg = small_config(0);
  cfg.anomaly_fraction = 1.0;
  EXPECT_THROW(generate_planted(cfg), ArgumentError);
}

TEST(Planted, ZeroSeparationIsUndetectable) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScenarioConfig cfg;
    cfg.mean_separation = 0.0;
    cfg.seed = seed;
    cfg.n_bags_pos = 10;
    cfg.n_bags_neg = 10;
    const auto train_set = generate_planted(cfg);
    cfg.seed = mix_seed(seed, 9);
    const auto test_set = generate_planted(cfg);
    TrainConfig tc;
    tc.epochs = 20;
    tc.learning_rate = 0.01;
    tc.seed = seed;
    const auto model = train(train_set, tc).model;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& b : test_set.bags) {
      const auto s = score_bag(model, b);
      scores.insert(scores.end(), s.begin(), s.end());
      labels.insert(labels.end(), b.segment_labels->begin(), b.segment_labels->end());
    }
    total += roc_auc(scores, labels).auc;
  }
  EXPECT_NEAR(total / 10.0, 0.5, 0.1);
}

TEST(Outliers, ZeroCountIsNoOp) {
  const auto ds = generate_planted(small_config(5));
  EXPECT_EQ(dataset_hash(inject_outliers(ds, 0, 1)), dataset_hash(ds));
}

TEST(Outliers, ExactCountInAbnormalBagsOnly) {
  ScenarioConfig cfg = small_config(6);
  cfg.n_bags_pos = 5;  // 160 abnormal segments
  const auto ds = generate_planted(cfg);
  const auto out = inject_outliers(ds, 120, 7);
  int changed = 0;
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    EXPECT_EQ(out.bags[b].segment_labels, ds.bags[b].segment_labels);
    for (Eigen::Index i = 0; i < ds.bags[b].segments(); ++i) {
      const bool differs = out.bags[b].features.row(i) != ds.bags[b].features.row(i);
      if (!ds.bags[b].abnormal()) EXPECT_FALSE(differs);
      changed += differs;
    }
  }
  EXPECT_EQ(changed, 120);
  EXPECT_EQ(dataset_hash(inject_outliers(ds, 120, 7)), dataset_hash(out));
}

TEST(Outliers, AllAbnormalSegmentsAndTooMany) {
  const auto ds = generate_planted(small_config(8));
  const auto out = inject_outliers(ds, 4 * 32, 1);
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    if (!ds.bags[b].abnormal()) continue;
    for (Eigen::Index i = 0; i < 32; ++i) EXPECT_NE(out.bags[b].features.row(i), ds.bags[b].features.row(i));
  }
  EXPECT_THROW(inject_outliers(ds, 4 * 32 + 1, 1), ArgumentError);
}

TEST(Multimodal, BagCountsAndLabels) {
  ScenarioConfig base = small_config(9);
  base.n_segments = 16;
  const auto modes = generate_mode_datasets(base, 3, 4, 4);
  const auto ds = make_multimodal_bags(modes, 50, 50, 3);
  ASSERT_EQ(ds.bags.size(), 100u);
  validate_dataset(ds);
  for (const auto& b : ds.bags) {
    EXPECT_EQ(b.segments(), static_cast<Eigen::Index>(kDefaultSegments));
    int ones = 0;
    for (int l : *b.segment_labels) ones += l;
    if (b.abnormal()) EXPECT_GE(ones, 3) << b.id;
    else EXPECT_EQ(ones, 0) << b.id;
  }
  EXPECT_EQ(dataset_hash(make_multimodal_bags(modes, 50, 50, 3)), dataset_hash(ds));
  EXPECT_NE(dataset_hash(make_multimodal_bags(modes, 50, 50, 4)), dataset_hash(ds));
}

TEST(Multimodal, ForcedCombinationDiffersOnlyInOrder) {
  ScenarioConfig base = small_config(10);
  base.n_segments = 16;
  const auto modes = generate_mode_datasets(base, 3, 1, 1);
  const auto ds = make_multimodal_bags(modes, 6, 0, 1, 48);
  auto row_set = [](const Bag& b) {
    std::multiset<double> s;
    for (Eigen::Index i = 0; i < b.segments(); ++i) s.insert(b.features.row(i).sum());
    return s;
  };
  for (const auto& b : ds.bags) EXPECT_EQ(row_set(b), row_set(ds.bags.front()));
}

TEST(Multimodal, RequiresThreeAbnormalModes) {
  ScenarioConfig base = small_config(11);
  EXPECT_THROW(make_multimodal_bags(generate_mode_datasets(base, 2, 2, 2), 2, 2, 1), ArgumentError);
  auto normal_only = generate_mode_datasets(base, 3, 2, 2);
  for (auto& m : normal_only) {
    std::erase_if(m.bags, [](const Bag& b) { return b.abnormal(); });
  }
  EXPECT_THROW(make_multimodal_bags(normal_only, 2, 2, 1), ArgumentError);
}

}  // namespace
}  // namespace bnsvp
