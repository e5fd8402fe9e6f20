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

// Command-line entry point: generate, partition, train, eval, report and
// ablate subcommands. Exit codes: 0 success, 1 I/O or numeric failure,
// 2 argument error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bnsvp/bnsvp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::size_t thread_cap() {
  const char* env = std::getenv("BNSVP_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw bnsvp::ArgumentError("BNSVP_THREADS must be a positive integer");
  return static_cast<std::size_t>(v);
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw bnsvp::IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& doc) { bnsvp::detail::write_text(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(bnsvp::read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw bnsvp::FormatError(path.string() + ": " + e.what());
  }
}

// Collects what a run did; written as JSON when the command finishes.
struct RunRecord {
  std::string command_line;
  std::string subcommand;
  json config = json::object();
  std::uint64_t seed = 0;
  std::string started = utc_now();
  std::vector<std::string> outputs;

  void write(const fs::path& path) {
    outputs.push_back(path.string());
    const json doc = {{"command_line", command_line}, {"subcommand", subcommand}, {"config", config},
                      {"seed", seed},                 {"threads", thread_cap()},  {"started", started},
                      {"finished", utc_now()},        {"outputs", outputs}};
    write_json(path, doc);
  }
};

bnsvp::PartitionConfig partition_config(const json& c) {
  bnsvp::PartitionConfig p;
  p.alpha = c.at("alpha");
  p.gamma = c.at("gamma");
  p.rho = c.at("rho");
  p.tau = c.at("tau");
  p.max_states = c.at("max_states");
  p.max_components = c.at("max_components");
  p.n_iters = c.at("iters");
  p.burn_in = c.at("burn_in");
  p.split_merge_moves = c.at("split_merge_moves");
  p.seed = c.at("seed");
  return p;
}

struct PartitionFlags {
  double alpha = 1.0, gamma = 1.0, rho = 1.0, tau = 1.0;
  std::size_t max_states = 10, max_components = 5, iters = 300, burn_in = 100, split_merge_moves = 20;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "transition concentration")->capture_default_str();
    app->add_option("--gamma", gamma, "top-level stick concentration")->capture_default_str();
    app->add_option("--rho", rho, "sticky self-transition mass")->capture_default_str();
    app->add_option("--tau", tau, "per-scene component concentration")->capture_default_str();
    app->add_option("--max-states", max_states, "scene truncation L")->capture_default_str();
    app->add_option("--max-components", max_components, "component truncation T")->capture_default_str();
    app->add_option("--iters", iters, "Gibbs sweeps")->capture_default_str();
    app->add_option("--burn-in", burn_in, "sweeps discarded as burn-in")->capture_default_str();
    app->add_option("--split-merge-moves", split_merge_moves, "split-merge proposals per sweep")->capture_default_str();
  }

  json to_json(std::uint64_t seed) const {
    return {{"alpha", alpha},   {"gamma", gamma},     {"rho", rho},
            {"tau", tau},       {"max_states", max_states}, {"max_components", max_components},
            {"iters", iters},   {"burn_in", burn_in}, {"split_merge_moves", split_merge_moves},
            {"seed", seed}};
  }
};

std::map<std::string, bnsvp::PartitionResult> load_partitions(const fs::path& dir, const bnsvp::Dataset& ds) {
  std::map<std::string, bnsvp::PartitionResult> out;
  for (const auto& bag : ds.bags) {
    if (!bag.abnormal()) continue;
    const fs::path file = dir / (bag.id + ".json");
    if (!fs::exists(file)) throw bnsvp::IoError("missing partition '" + file.string() + "'");
    out[bag.id] = bnsvp::partition_from_json(read_json(file));
  }
  return out;
}

std::vector<std::string> bags_without_labels(const bnsvp::Dataset& ds) {
  std::vector<std::string> missing;
  for (const auto& bag : ds.bags) {
    if (!bag.segment_labels) missing.push_back(bag.id);
  }
  return missing;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateFlags {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t dim = 8, segments = bnsvp::kDefaultSegments, pos_bags = 20, neg_bags = 20;
  std::size_t test_pos_bags = 10, test_neg_bags = 10;
  std::size_t outlier_count = 38;
  std::size_t modes = 3;
  std::size_t anomaly_modes = 1;
  double separation = 6.0;
};

void write_truth(const fs::path& path, const std::vector<bnsvp::PlantedBag>& bags) {
  json doc = json::object();
  for (const auto& b : bags) {
    doc[b.bag.id] = {{"scenes", b.scenes}, {"components", b.components}, {"anomaly_mode", b.anomaly_mode}};
  }
  write_json(path, doc);
}

int cmd_generate(const GenerateFlags& f, RunRecord& rec) {
  bnsvp::ScenarioConfig base;
  base.dim = f.dim;
  base.n_segments = f.segments;
  base.mean_separation = f.separation;
  base.anomaly_modes = f.anomaly_modes;

  const fs::path out(f.out);
  make_dirs(out);
  rec.config = {{"scenario", f.scenario},   {"dim", f.dim},
                {"segments", f.segments},   {"pos_bags", f.pos_bags},
                {"neg_bags", f.neg_bags},   {"test_pos_bags", f.test_pos_bags},
                {"test_neg_bags", f.test_neg_bags}, {"separation", f.separation},
                {"anomaly_modes", f.anomaly_modes}};

  bnsvp::Dataset train, test;
  if (f.scenario == "planted" || f.scenario == "outlier") {
    bnsvp::ScenarioConfig tr = base;
    tr.seed = bnsvp::mix_seed(f.seed, 1);
    tr.n_bags_pos = f.pos_bags;
    tr.n_bags_neg = f.neg_bags;
    bnsvp::ScenarioConfig te = base;
    te.seed = bnsvp::mix_seed(f.seed, 2);
    te.n_bags_pos = f.test_pos_bags;
    te.n_bags_neg = f.test_neg_bags;
    te.id_prefix = "test_";
    const auto tr_truth = bnsvp::generate_planted_truth(tr);
    const auto te_truth = bnsvp::generate_planted_truth(te);
    for (const auto& b : tr_truth) train.bags.push_back(b.bag);
    for (const auto& b : te_truth) test.bags.push_back(b.bag);
    if (f.scenario == "outlier") {
      train = bnsvp::inject_outliers(train, f.outlier_count, bnsvp::mix_seed(f.seed, 3));
      rec.config["outlier_count"] = f.outlier_count;
    }
    make_dirs(out / "train");
    make_dirs(out / "test");
    write_truth(out / "train" / "ground_truth.json", tr_truth);
    write_truth(out / "test" / "ground_truth.json", te_truth);
    rec.outputs.push_back((out / "train" / "ground_truth.json").string());
    rec.outputs.push_back((out / "test" / "ground_truth.json").string());
  } else if (f.scenario == "multimodal") {
    bnsvp::ScenarioConfig tr = base;
    tr.seed = bnsvp::mix_seed(f.seed, 1);
    bnsvp::ScenarioConfig te = base;
    te.seed = bnsvp::mix_seed(f.seed, 2);
    te.id_prefix = "test_";
    train = bnsvp::make_multimodal_bags(bnsvp::generate_mode_datasets(tr, f.modes, f.pos_bags, f.neg_bags), f.pos_bags,
                                        f.neg_bags, bnsvp::mix_seed(f.seed, 4), f.segments);
    test = bnsvp::make_multimodal_bags(bnsvp::generate_mode_datasets(te, f.modes, f.test_pos_bags, f.test_neg_bags),
                                       f.test_pos_bags, f.test_neg_bags, bnsvp::mix_seed(f.seed, 5), f.segments,
                                       "test_");
    rec.config["modes"] = f.modes;
  } else {
    throw bnsvp::ArgumentError("unknown scenario '" + f.scenario + "' (expected planted, outlier or multimodal)");
  }
  train.name = "train";
  test.name = "test";
  bnsvp::save_dataset(train, out / "train", "manifest.json");
  bnsvp::save_dataset(test, out / "test", "manifest.json");
  rec.outputs.push_back((out / "train" / "manifest.json").string());
  rec.outputs.push_back((out / "test" / "manifest.json").string());
  rec.write(out / "run.json");
  return 0;
}

// ---------------------------------------------------------------------------
// partition
// ---------------------------------------------------------------------------

int cmd_partition(const std::string& manifest, const PartitionFlags& pf, std::uint64_t seed, const std::string& out_dir,
                  bool all_bags, RunRecord& rec) {
  const bnsvp::Dataset ds = bnsvp::load_dataset(manifest);
  const fs::path out(out_dir);
  rec.config = pf.to_json(seed);
  rec.config["manifest"] = manifest;
  rec.config["all_bags"] = all_bags;
  bnsvp::PartitionConfig pc = partition_config(rec.config);
  pc.validate();
  make_dirs(out);
  std::string summary = "id,kappa,final_transitions,mean_transitions\n";
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    const auto& bag = ds.bags[b];
    if (!all_bags && !bag.abnormal()) continue;
    bnsvp::PartitionConfig cfg = pc;
    cfg.seed = bnsvp::mix_seed(seed, b);
    const auto r = bnsvp::run_gibbs(bag, cfg);
    const fs::path file = out / (bag.id + ".json");
    write_json(file, bnsvp::to_json(r));
    rec.outputs.push_back(file.string());
    summary += bag.id + "," + std::to_string(r.kappa) + "," + std::to_string(bnsvp::scene_transitions(r.z)) + "," +
               bnsvp::detail::format_double(bnsvp::mean_scene_transitions(r)) + "\n";
  }
  bnsvp::detail::write_text(out / "partitions.csv", summary);
  rec.outputs.push_back((out / "partitions.csv").string());
  rec.write(out / "run.json");
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string manifest;
  std::string loss = "max";
  std::size_t k = 1;
  double epsilon_percentile = 35.0;
  double lr = 0.001;
  double l2 = 0.001;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::string partitions;
  bool auto_partition = false;
  bool propagation = false;
  std::size_t refresh_every = 0;
  double smoothness = 0.0;
  double sparsity = 0.0;
  PartitionFlags pf;
};

bnsvp::TrainConfig train_config(const TrainFlags& f) {
  bnsvp::TrainConfig tc;
  tc.loss_kind = bnsvp::parse_loss_kind(f.loss);
  tc.k = f.k;
  tc.epsilon_percentile = f.epsilon_percentile;
  tc.learning_rate = f.lr;
  tc.l2_coeff = f.l2;
  tc.epochs = f.epochs;
  tc.seed = f.seed;
  tc.use_propagation = f.propagation;
  if (f.refresh_every > 0) tc.partition_refresh_every = f.refresh_every;
  tc.smoothness = f.smoothness;
  tc.sparsity = f.sparsity;
  tc.partition_config = partition_config(f.pf.to_json(bnsvp::mix_seed(f.seed, 7)));
  return tc;
}

json train_flags_json(const TrainFlags& f) {
  return {{"manifest", f.manifest},
          {"loss", f.loss},
          {"k", f.k},
          {"epsilon_percentile", f.epsilon_percentile},
          {"lr", f.lr},
          {"l2", f.l2},
          {"epochs", f.epochs},
          {"partitions", f.partitions.empty() ? json(nullptr) : json(f.partitions)},
          {"auto_partition", f.auto_partition},
          {"propagation", f.propagation},
          {"refresh_every", f.refresh_every == 0 ? json(nullptr) : json(f.refresh_every)},
          {"smoothness", f.smoothness},
          {"sparsity", f.sparsity},
          {"partition", f.pf.to_json(bnsvp::mix_seed(f.seed, 7))}};
}

int cmd_train(const TrainFlags& f, RunRecord& rec) {
  const bnsvp::TrainConfig tc = train_config(f);
  const bool bnsvp_loss = tc.loss_kind == bnsvp::LossKind::kBnsvp;
  if (bnsvp_loss && f.partitions.empty() && !f.auto_partition) {
    throw bnsvp::ArgumentError("--loss bnsvp needs --partitions DIR or --auto-partition");
  }
  tc.validate();
  rec.config = train_flags_json(f);
  const bnsvp::Dataset ds = bnsvp::load_dataset(f.manifest);
  std::map<std::string, bnsvp::PartitionResult> parts;
  if (bnsvp_loss && !f.partitions.empty()) parts = load_partitions(f.partitions, ds);
  const auto result = bnsvp::train(ds, tc, std::move(parts));

  const fs::path model_path(f.out);
  if (model_path.has_parent_path()) make_dirs(model_path.parent_path());
  write_json(model_path, bnsvp::to_json(result.model));
  fs::path log_path = model_path;
  log_path.replace_extension(".log.csv");
  bnsvp::detail::write_text(log_path, result.log.to_csv());
  rec.outputs.push_back(model_path.string());
  rec.outputs.push_back(log_path.string());
  fs::path run_path = model_path;
  run_path.replace_extension(".run.json");
  rec.write(run_path);
  return 0;
}

// ---------------------------------------------------------------------------
// eval / report
// ---------------------------------------------------------------------------

bnsvp::RocResult evaluate(const bnsvp::ScorerModel& model, const bnsvp::Dataset& ds, std::string* scores_csv) {
  const auto missing = bags_without_labels(ds);
  if (!missing.empty()) throw bnsvp::ValidationError("bag '" + missing.front() + "' has no segment labels to evaluate against");
  std::vector<double> scores;
  std::vector<int> labels;
  if (scores_csv) *scores_csv = "bag,segment,label,score\n";
  for (const auto& bag : ds.bags) {
    const auto s = bnsvp::score_bag(model, bag);
    for (std::size_t i = 0; i < s.size(); ++i) {
      scores.push_back(s[i]);
      labels.push_back((*bag.segment_labels)[i]);
      if (scores_csv) {
        *scores_csv += bag.id + "," + std::to_string(i) + "," + std::to_string((*bag.segment_labels)[i]) + "," +
                       bnsvp::detail::format_double(s[i]) + "\n";
      }
    }
  }
  return bnsvp::roc_auc(scores, labels);
}

int cmd_eval(const std::string& manifest, const std::string& model_path, const std::string& out_dir,
             const std::string& name, RunRecord& rec) {
  rec.config = {{"manifest", manifest}, {"model", model_path}, {"name", name}};
  const bnsvp::Dataset ds = bnsvp::load_dataset(manifest);
  const auto model = bnsvp::model_from_json(read_json(model_path));
  std::string scores_csv;
  const auto roc = evaluate(model, ds, &scores_csv);
  const fs::path out(out_dir);
  bnsvp::report({{name, roc}}, out);
  bnsvp::detail::write_text(out / "scores.csv", scores_csv);
  for (const char* f : {"metrics.csv", "scores.csv"}) rec.outputs.push_back((out / f).string());
  rec.outputs.push_back((out / ("roc_" + name + ".csv")).string());
  rec.write(out / "run.json");
  return 0;
}

int cmd_report(const std::string& in_dir, std::string out_dir, bool svg, RunRecord& rec) {
  const fs::path in(in_dir);
  if (!fs::is_directory(in)) throw bnsvp::IoError("'" + in_dir + "' is not a directory");
  if (out_dir.empty()) out_dir = (in / "report").string();
  rec.config = {{"in", in_dir}, {"out", out_dir}, {"svg", svg}};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in)) {
    const std::string fname = entry.path().filename().string();
    if (entry.is_regular_file() && fname.rfind("roc_", 0) == 0 && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw bnsvp::ArgumentError("no roc_<name>.csv files in '" + in_dir + "'");
  std::vector<std::pair<std::string, bnsvp::RocResult>> results;
  for (const auto& p : files) {
    const std::string stem = p.stem().string();
    results.emplace_back(stem.substr(4), bnsvp::read_roc_csv(p));
  }
  const fs::path out(out_dir);
  bnsvp::report(results, out, svg);
  rec.outputs.push_back((out / "metrics.csv").string());
  rec.write(out / "run.json");
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

int cmd_ablate(const TrainFlags& f, const std::string& test_manifest, const std::vector<double>& percentiles,
               RunRecord& rec) {
  if (percentiles.empty()) throw bnsvp::ArgumentError("--percentiles is empty");
  TrainFlags tf = f;
  tf.loss = "bnsvp";
  bnsvp::TrainConfig tc = train_config(tf);
  tc.validate();
  rec.config = train_flags_json(tf);
  rec.config["test_manifest"] = test_manifest;
  rec.config["percentiles"] = percentiles;
  const bnsvp::Dataset train = bnsvp::load_dataset(f.manifest);
  const bnsvp::Dataset test = bnsvp::load_dataset(test_manifest);

  std::map<std::string, bnsvp::PartitionResult> parts;
  if (!f.partitions.empty()) parts = load_partitions(f.partitions, train);
  std::string csv = "percentile,auc\n";
  for (double p : percentiles) {
    tc.epsilon_percentile = p;
    const auto result = bnsvp::train(train, tc, parts);
    // Reuse the first run's partitions so every percentile sees the same ones.
    if (parts.empty()) parts = result.partitions;
    csv += bnsvp::detail::format_double(p) + "," + bnsvp::detail::format_double(evaluate(result.model, test, nullptr).auc) + "\n";
  }
  const fs::path out(f.out);
  make_dirs(out);
  bnsvp::detail::write_text(out / "ablation.csv", csv);
  rec.outputs.push_back((out / "ablation.csv").string());
  rec.write(out / "run.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric submodular video partition for MIL anomaly detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  RunRecord rec;
  for (int i = 0; i < argc; ++i) rec.command_line += (i ? " " : "") + std::string(argv[i]);
  std::function<int()> action;

  GenerateFlags gen;
  auto* g = app.add_subcommand("generate", "write a synthetic train/test dataset");
  g->add_option("--scenario", gen.scenario, "planted, outlier or multimodal")->required();
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--dim", gen.dim)->capture_default_str();
  g->add_option("--segments", gen.segments)->capture_default_str();
  g->add_option("--pos-bags", gen.pos_bags, "training abnormal bags")->capture_default_str();
  g->add_option("--neg-bags", gen.neg_bags, "training normal bags")->capture_default_str();
  g->add_option("--test-pos-bags", gen.test_pos_bags)->capture_default_str();
  g->add_option("--test-neg-bags", gen.test_neg_bags)->capture_default_str();
  g->add_option("--outlier-count", gen.outlier_count, "outlier scenario only")->capture_default_str();
  g->add_option("--modes", gen.modes, "anomaly types, multimodal scenario only")->capture_default_str();
  g->add_option("--anomaly-modes", gen.anomaly_modes, "anomaly blocks per planted abnormal bag")->capture_default_str();
  g->add_option("--separation", gen.separation, "distance between centers in noise std units")->capture_default_str();
  g->callback([&] {
    rec.subcommand = "generate";
    rec.seed = gen.seed;
    action = [&] { return cmd_generate(gen, rec); };
  });

  std::string p_manifest, p_out;
  std::uint64_t p_seed = 0;
  bool p_all = false;
  PartitionFlags pflags;
  auto* p = app.add_subcommand("partition", "partition abnormal bags into scenes and components");
  p->add_option("--manifest", p_manifest)->required();
  p->add_option("--out", p_out, "output directory")->required();
  p->add_option("--seed", p_seed)->capture_default_str();
  p->add_flag("--all-bags", p_all, "partition normal bags too");
  pflags.add(p);
  p->callback([&] {
    rec.subcommand = "partition";
    rec.seed = p_seed;
    action = [&] { return cmd_partition(p_manifest, pflags, p_seed, p_out, p_all, rec); };
  });

  auto add_train_flags = [](CLI::App* s, TrainFlags& f) {
    s->add_option("--manifest", f.manifest, "training manifest")->required();
    s->add_option("--k", f.k, "top-k size")->capture_default_str();
    s->add_option("--epsilon-percentile", f.epsilon_percentile)->capture_default_str();
    s->add_option("--lr", f.lr, "learning rate")->capture_default_str();
    s->add_option("--l2", f.l2, "l2 coefficient on the logistic weights")->capture_default_str();
    s->add_option("--epochs", f.epochs)->capture_default_str();
    s->add_option("--seed", f.seed)->capture_default_str();
    s->add_option("--partitions", f.partitions, "directory of partition JSON files");
    s->add_flag("--auto-partition", f.auto_partition, "partition abnormal bags inline");
    s->add_flag("--propagation", f.propagation, "score graph-propagated features");
    s->add_option("--refresh-every", f.refresh_every, "re-partition every N epochs (0 never)")->capture_default_str();
    s->add_option("--smoothness", f.smoothness)->capture_default_str();
    s->add_option("--sparsity", f.sparsity)->capture_default_str();
    f.pf.add(s);
  };

  TrainFlags tflags;
  auto* t = app.add_subcommand("train", "train a segment scorer");
  add_train_flags(t, tflags);
  t->add_option("--loss", tflags.loss, "max, topk or bnsvp")->capture_default_str();
  t->add_option("--out", tflags.out, "model JSON path")->required();
  t->callback([&] {
    rec.subcommand = "train";
    rec.seed = tflags.seed;
    action = [&] { return cmd_train(tflags, rec); };
  });

  std::string e_manifest, e_model, e_out, e_name = "model";
  auto* e = app.add_subcommand("eval", "score a labeled dataset and write ROC/AUC");
  e->add_option("--manifest", e_manifest)->required();
  e->add_option("--model", e_model)->required();
  e->add_option("--out", e_out, "output directory")->required();
  e->add_option("--name", e_name, "curve name")->capture_default_str();
  e->callback([&] {
    rec.subcommand = "eval";
    action = [&] { return cmd_eval(e_manifest, e_model, e_out, e_name, rec); };
  });

  std::string r_in, r_out;
  bool r_svg = false;
  auto* r = app.add_subcommand("report", "collect roc_<name>.csv files into a metrics table");
  r->add_option("--in", r_in, "directory with roc_<name>.csv files")->required();
  r->add_option("--out", r_out, "output directory (default <in>/report)");
  r->add_flag("--svg", r_svg, "also write SVG plots");
  r->callback([&] {
    rec.subcommand = "report";
    action = [&] { return cmd_report(r_in, r_out, r_svg, rec); };
  });

  TrainFlags aflags;
  aflags.auto_partition = true;
  std::string a_test;
  std::vector<double> a_percentiles = {10, 20, 35, 50, 75};
  auto* a = app.add_subcommand("ablate", "sweep the epsilon percentile of the bnsvp loss");
  add_train_flags(a, aflags);
  a->add_option("--test-manifest", a_test)->required();
  a->add_option("--percentiles", a_percentiles)->delimiter(',')->capture_default_str();
  a->add_option("--out", aflags.out, "output directory")->required();
  a->callback([&] {
    rec.subcommand = "ablate";
    rec.seed = aflags.seed;
    action = [&] { return cmd_ablate(aflags, a_test, a_percentiles, rec); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    const CLI::App* shown = &app;
    if (argc > 1) {
      for (const auto* sub : app.get_subcommands({})) {
        if (sub->get_name() == argv[1]) shown = sub;
      }
    }
    std::cerr << "error: " << ex.what() << "\n\n" << shown->help();
    return 2;
  }

  try {
    return action();
  } catch (const bnsvp::ArgumentError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const bnsvp::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
