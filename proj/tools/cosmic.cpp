// Copyright 2026 The COSMic Toolkit Authors.
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

// cosmic: command-line front end for feature stores, training, scoring,
// augmentation, ablation and system-level benchmarking.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cosmic/augment.hpp"
#include "cosmic/bench.hpp"
#include "cosmic/checkpoint.hpp"
#include "cosmic/corpus.hpp"
#include "cosmic/error.hpp"
#include "cosmic/features.hpp"
#include "cosmic/model.hpp"
#include "cosmic/textmetrics.hpp"
#include "cosmic/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cosmic;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("cosmic");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("COSMIC_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw UsageError("COSMIC_LOG must be error, info or debug, got \"" + level + "\"");
  }
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// Refuses to write over any file the command reads.
void guard_output(const fs::path& out, const std::vector<fs::path>& inputs) {
  std::error_code ec;
  const fs::path target = fs::weakly_canonical(out, ec);
  for (const fs::path& in : inputs) {
    if (in.empty()) continue;
    if (fs::weakly_canonical(in, ec) == target) {
      throw UsageError("output " + out.string() + " would overwrite input " + in.string());
    }
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::optional<double> tau_or_null(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  try {
    return kendall_tau_b(x, y);
  } catch (const Error&) {
    return std::nullopt;
  }
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); }

// ---------------------------------------------------------------- features

struct SynthArgs {
  std::string keys_file, data, systems_dir, references, modality = "text", out;
  std::uint32_t dim = 0;
  std::uint64_t seed = 0;
};

std::vector<fs::path> system_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no *.json system files in " + dir.string());
  return files;
}

int run_synth(const SynthArgs& a, bool json) {
  std::set<std::string> keys;
  const bool image = a.modality == "image";
  if (!a.keys_file.empty()) {
    std::ifstream in(a.keys_file, std::ios::binary);
    if (!in) throw Error("cannot open " + a.keys_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) keys.insert(line);
    }
  }
  if (!a.data.empty()) {
    for (const RatedSample& s : load_dataset(a.data).samples) {
      if (image) {
        keys.insert(image_key(s.image_key));
      } else {
        keys.insert(caption_key(s.generated.text));
        keys.insert(caption_key(s.reference.text));
      }
    }
  }
  if (!a.systems_dir.empty()) {
    for (const fs::path& f : system_files(a.systems_dir)) {
      for (const auto& [img, text] : load_system_run(f).outputs) {
        keys.insert(image ? image_key(img) : caption_key(text));
      }
    }
  }
  if (!a.references.empty()) {
    for (const auto& [img, text] : load_references(a.references)) {
      keys.insert(image ? image_key(img) : caption_key(text));
    }
  }
  if (keys.empty()) throw Error("no keys to synthesize");
  guard_output(a.out, {a.keys_file, a.data, a.references});

  const FeatureStore store = synth_store({keys.begin(), keys.end()}, a.dim, a.seed);
  auto out = open_out(a.out);
  const std::size_t bytes = write_store(store, out);
  if (!out) throw Error("write failed for " + a.out);
  if (json) {
    print_json({{"path", a.out}, {"count", store.size()}, {"dim", store.dim()}, {"bytes", bytes}});
  } else {
    std::cout << "wrote " << store.size() << " vectors, dim " << store.dim() << ", " << bytes << " bytes to "
              << a.out << '\n';
  }
  return 0;
}

int run_inspect(const std::string& path, int show, bool json) {
  const FeatureStore store = load_store(path);
  std::size_t images = 0, captions = 0;
  double lo = 0.0, hi = 0.0, sum = 0.0;
  bool first = true;
  for (const auto& [key, vec] : store.entries()) {
    if (key.rfind("img:", 0) == 0) ++images;
    if (key.rfind("txt:", 0) == 0) ++captions;
    double sq = 0.0;
    for (float v : vec) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    lo = first ? norm : std::min(lo, norm);
    hi = first ? norm : std::max(hi, norm);
    sum += norm;
    first = false;
  }
  const double mean = store.empty() ? 0.0 : sum / static_cast<double>(store.size());
  std::vector<std::string> sample;
  for (const auto& [key, vec] : store.entries()) {
    if (static_cast<int>(sample.size()) >= show) break;
    sample.push_back(key);
  }
  if (json) {
    print_json({{"path", path},
                {"dim", store.dim()},
                {"count", store.size()},
                {"image_keys", images},
                {"caption_keys", captions},
                {"other_keys", store.size() - images - captions},
                {"norm", {{"min", lo}, {"mean", mean}, {"max", hi}}},
                {"keys", sample}});
    return 0;
  }
  std::cout << path << ": " << store.size() << " vectors, dim " << store.dim() << '\n'
            << "  keys: " << images << " img, " << captions << " txt, " << store.size() - images - captions
            << " other\n"
            << "  L2 norm min/mean/max: " << fixed(lo) << " / " << fixed(mean) << " / " << fixed(hi) << '\n';
  for (const auto& k : sample) std::cout << "  " << k << '\n';
  return 0;
}

// ---------------------------------------------------------------- training

struct ModelArgs {
  bool no_image = false;
  bool no_coherence = false;
  Eigen::Index embed_dim = ModelConfig{}.embed_dim;
  std::vector<Eigen::Index> hidden = ModelConfig{}.hidden_sizes;
};

struct DataArgs {
  std::string data, val_data;
  std::vector<std::string> features;
  std::optional<double> val_fraction;
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.data, "rated samples (JSONL)")->required();
  cmd->add_option("--features", d.features, "feature store (repeatable)")->required();
  cmd->add_option("--val-data", d.val_data, "separate validation samples (JSONL)");
  cmd->add_option("--val-fraction", d.val_fraction,
                  "held-out fraction; default: the records' split field, else 0.1")
      ->check(CLI::Range(0.0, 1.0));
}

void add_train_options(CLI::App* cmd, TrainConfig& t, ModelArgs& m) {
  cmd->add_option("--seed", t.seed, "seed for initialization, splitting and shuffling")->required();
  cmd->add_option("--batch-size", t.batch_size, "samples per update")->capture_default_str();
  cmd->add_option("--lr", t.base_lr, "initial learning rate")->capture_default_str();
  cmd->add_option("--decay-factor", t.decay_factor, "learning-rate multiplier per decay step")
      ->capture_default_str();
  cmd->add_option("--decay-every", t.decay_every, "epochs between decay steps")->capture_default_str();
  cmd->add_option("--max-epochs", t.max_epochs, "epoch limit")->capture_default_str();
  cmd->add_option("--patience", t.patience, "epochs without validation gain before stopping")
      ->capture_default_str();
  cmd->add_option("--val-tolerance", t.val_tolerance, "minimum validation gain")->capture_default_str();
  cmd->add_option("--target-loss", t.target_train_loss, "stop once train MSE is below this (0: off)")
      ->capture_default_str();
  cmd->add_flag("--no-image", m.no_image, "drop the image input");
  cmd->add_flag("--no-coherence", m.no_coherence, "drop the coherence-label inputs");
  cmd->add_option("--embed-dim", m.embed_dim, "projection width")->capture_default_str();
  cmd->add_option("--hidden", m.hidden, "MLP widths")->delimiter(',')->capture_default_str();
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

Eigen::Index store_dim_for(const FeatureBank& bank, const std::string& key, const char* what) {
  const FeatureStore* store = bank.find_store(key);
  if (!store) throw Error("no feature store holds " + std::string(what) + " key \"" + key + "\"");
  return static_cast<Eigen::Index>(store->dim());
}

ModelConfig model_config(const ModelArgs& m, const Dataset& ds, const FeatureBank& bank) {
  if (ds.samples.empty()) throw Error("dataset " + ds.name + " is empty");
  ModelConfig c;
  c.use_image = !m.no_image;
  c.use_coherence = !m.no_coherence;
  c.embed_dim = m.embed_dim;
  c.hidden_sizes = m.hidden;
  const RatedSample& s = ds.samples.front();
  c.text_dim = store_dim_for(bank, caption_key(s.generated.text), "caption");
  if (c.use_image) c.image_dim = store_dim_for(bank, image_key(s.image_key), "image");
  c.validate();
  return c;
}

std::pair<Dataset, Dataset> make_split(const Dataset& ds, const DataArgs& d, std::uint64_t seed) {
  if (!d.val_data.empty()) return {ds, load_dataset(d.val_data)};
  const bool has_field = std::any_of(ds.samples.begin(), ds.samples.end(), [](const RatedSample& s) {
    return s.split.has_value();
  });
  if (d.val_fraction || !has_field) return split_dataset(ds, d.val_fraction.value_or(0.1), seed);
  auto split = split_by_field(ds);
  if (split.second.samples.empty()) throw Error("no record has split \"val\"");
  if (split.first.samples.empty()) throw Error("every record has split \"val\"");
  return split;
}

void log_history(const TrainHistory& h) {
  for (const EpochRecord& e : h.epochs) {
    spdlog::debug("epoch {} lr {:.3g} train {:.6g} val {:.6g}", e.epoch, e.lr, e.train_loss, e.val_loss);
  }
  spdlog::info("{} epochs, {} steps, stopped on {}, best epoch {}", h.stopped_epoch, h.steps, h.stop_reason,
               h.best_epoch);
}

ordered_json history_summary(const TrainHistory& h) {
  ordered_json j;
  j["epochs"] = h.stopped_epoch;
  j["steps"] = h.steps;
  j["stop_reason"] = h.stop_reason;
  j["best_epoch"] = h.best_epoch;
  j["initial_val_loss"] = h.initial_val_loss;
  if (!h.epochs.empty()) {
    j["final_train_loss"] = h.epochs.back().train_loss;
    j["final_val_loss"] = h.epochs.back().val_loss;
  }
  double best = h.initial_val_loss;
  for (const EpochRecord& e : h.epochs) best = std::min(best, e.val_loss);
  j["best_val_loss"] = best;
  return j;
}

struct TrainArgs {
  DataArgs data;
  TrainConfig train;
  ModelArgs model;
  std::string out_model, history;
};

int run_train(const TrainArgs& a, bool json) {
  const Dataset ds = load_dataset(a.data.data);
  const FeatureBank bank = load_bank(as_paths(a.data.features));
  const ModelConfig mcfg = model_config(a.model, ds, bank);
  std::vector<fs::path> inputs = as_paths(a.data.features);
  inputs.emplace_back(a.data.data);
  inputs.emplace_back(a.data.val_data);
  guard_output(a.out_model, inputs);
  if (!a.history.empty()) guard_output(a.history, inputs);

  const auto [train_set, val_set] = make_split(ds, a.data, a.train.seed);
  spdlog::info("training on {} samples, validating on {}, {} parameters", train_set.size(), val_set.size(),
               param_count(mcfg));
  const TrainResult r = train(train_set, val_set, bank, mcfg, a.train);
  log_history(r.history);

  auto out = open_out(a.out_model);
  write_checkpoint(Checkpoint{mcfg, r.params}, out);
  if (!out) throw Error("write failed for " + a.out_model);
  if (!a.history.empty()) {
    auto h = open_out(a.history);
    r.history.write_jsonl(h);
  }

  ordered_json summary = history_summary(r.history);
  if (json) {
    summary["model"] = a.out_model;
    summary["parameters"] = param_count(mcfg);
    summary["train_samples"] = train_set.size();
    summary["val_samples"] = val_set.size();
    print_json(summary);
  } else {
    std::cout << "trained " << param_count(mcfg) << " parameters on " << train_set.size() << " samples ("
              << val_set.size() << " validation)\n"
              << "  epochs " << r.history.stopped_epoch << ", steps " << r.history.steps << ", stop "
              << r.history.stop_reason << ", best epoch " << r.history.best_epoch << '\n'
              << "  best validation MSE " << fixed(summary["best_val_loss"].get<double>(), 6) << '\n'
              << "  model written to " << a.out_model << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- scoring

struct Evaluation {
  std::vector<double> raw, presented, targets;
  double mse = 0.0;
  std::optional<double> tau;
  std::map<CoherenceLabel, double> mean_by_label;  // presented scores by generated label
};

Evaluation evaluate(const ModelParams& params, const ModelConfig& config, const Dataset& ds,
                    const FeatureBank& bank) {
  Evaluation e;
  const Eigen::RowVectorXd raw = predict(params, config, assemble_batch(ds, bank, config));
  e.raw.assign(raw.data(), raw.data() + raw.size());
  std::map<CoherenceLabel, std::pair<double, int>> acc;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double shown = presented_score(e.raw[i]);
    e.presented.push_back(shown);
    e.targets.push_back(ds.samples[i].target);
    auto& [sum, n] = acc[ds.samples[i].generated.label];
    sum += shown;
    ++n;
  }
  e.mse = mse_loss(e.raw, e.targets);
  e.tau = tau_or_null(e.raw, e.targets);
  for (const auto& [label, sn] : acc) e.mean_by_label[label] = sn.first / sn.second;
  return e;
}

ordered_json evaluation_json(const Evaluation& e) {
  ordered_json j;
  j["count"] = e.raw.size();
  j["mse"] = e.mse;
  j["tau_b"] = optional_json(e.tau);
  j["mean_score_by_label"] = ordered_json::object();
  for (const auto& [label, m] : e.mean_by_label) j["mean_score_by_label"][std::string(to_string(label))] = m;
  return j;
}

struct ScoreArgs {
  std::string model, data, out;
  std::vector<std::string> features;
};

int run_score(const ScoreArgs& a, bool json) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const FeatureBank bank = load_bank(as_paths(a.features));
  const Dataset ds = load_dataset(a.data);
  if (ds.samples.empty()) throw Error("dataset " + a.data + " is empty");
  std::vector<fs::path> inputs = as_paths(a.features);
  inputs.emplace_back(a.model);
  inputs.emplace_back(a.data);
  guard_output(a.out, inputs);

  const Evaluation e = evaluate(ckpt.params, ckpt.config, ds, bank);
  auto out = open_out(a.out);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const RatedSample& s = ds.samples[i];
    ordered_json row;
    row["image_key"] = s.image_key;
    row["gen_label"] = to_string(s.generated.label);
    row["target"] = s.target;
    row["raw"] = e.raw[i];
    row["score"] = e.presented[i];
    out << row.dump() << '\n';
  }
  if (!out) throw Error("write failed for " + a.out);

  if (json) {
    ordered_json j = evaluation_json(e);
    j["out"] = a.out;
    print_json(j);
  } else {
    std::cout << "scored " << ds.size() << " samples into " << a.out << '\n'
              << "  MSE vs targets " << fixed(e.mse, 6) << ", tau-b "
              << (e.tau ? fixed(*e.tau) : std::string("undefined")) << '\n';
    for (const auto& [label, m] : e.mean_by_label) {
      std::cout << "  mean score " << to_string(label) << ' ' << fixed(m) << '\n';
    }
  }
  return 0;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string data, out;
  double tolerance = 0.05;
  std::optional<double> target;
  std::uint64_t seed = 0;
};

int run_augment(const AugmentArgs& a, bool json) {
  const Dataset ds = load_dataset(a.data);
  guard_output(a.out, {a.data});
  const AugmentPlan plan = plan_augmentation(ds, a.tolerance, a.target);
  const Dataset out = augment(ds, plan, a.seed);
  save_dataset(out, a.out);

  const auto before = class_means(ds);
  const auto after = class_means(out);
  if (json) {
    ordered_json j;
    j["target_mean"] = plan.target_mean;
    j["tolerance"] = plan.tolerance;
    j["added"] = plan.total();
    j["samples"] = out.size();
    j["classes"] = ordered_json::object();
    for (const auto& [label, mean] : before) {
      const auto it = plan.negatives.find(label);
      j["classes"][std::string(to_string(label))] = {
          {"before", mean}, {"after", after.at(label)}, {"negatives", it == plan.negatives.end() ? 0 : it->second}};
    }
    j["out"] = a.out;
    print_json(j);
    return 0;
  }
  std::cout << "target class mean " << fixed(plan.target_mean) << " (tolerance " << fixed(plan.tolerance)
            << "), added " << plan.total() << " negatives, " << out.size() << " samples\n";
  std::printf("  %-11s %8s %8s %10s\n", "class", "before", "after", "negatives");
  for (const auto& [label, mean] : before) {
    const auto it = plan.negatives.find(label);
    std::printf("  %-11s %8.4f %8.4f %10zu\n", std::string(to_string(label)).c_str(), mean, after.at(label),
                it == plan.negatives.end() ? std::size_t{0} : it->second);
  }
  std::cout << "written to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string systems_dir, references, human, replay, model, out, tau = "b";
  std::vector<std::string> features;
  std::vector<std::string> metrics;
};

TauVariant parse_variant(const std::string& s) { return s == "a" ? TauVariant::A : TauVariant::B; }

// Loads system runs ordered as in the human-means file.
std::pair<std::vector<SystemRun>, std::vector<double>> load_systems(const std::string& dir,
                                                                    const std::string& human_csv) {
  std::map<std::string, SystemRun> by_name;
  for (const fs::path& f : system_files(dir)) {
    SystemRun run = load_system_run(f);
    const std::string name = run.system_name;
    if (!by_name.emplace(name, std::move(run)).second) throw Error("system " + name + " appears twice");
  }
  const SystemScoreTable human = load_score_table_csv(human_csv);
  std::vector<SystemRun> runs;
  for (const std::string& name : human.systems) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(human_csv + ": no system file for \"" + name + "\"");
    runs.push_back(std::move(it->second));
    by_name.erase(it);
  }
  if (!by_name.empty()) throw Error("system " + by_name.begin()->first + " has no human mean");
  return {std::move(runs), human.human};
}

std::vector<Metric> parse_metrics(const std::vector<std::string>& names) {
  if (names.empty()) return all_metrics();
  std::vector<Metric> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_metric(n));
    } catch (const Error& e) {
      throw UsageError(std::string("--metrics: ") + e.what());
    }
  }
  return out;
}

void emit_report(const RankReport& report, const std::string& out_path, bool json) {
  const ordered_json j = report_to_json(report);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for " + out_path);
  }
  if (json) {
    print_json(j);
  } else {
    write_report_text(report, std::cout);
    std::cout << "best column: " << report.best_metric
              << (is_model_column(report.best_metric) ? " (trained metric)" : "") << '\n';
  }
}

int run_bench(const BenchArgs& a, bool json) {
  const TauVariant variant = parse_variant(a.tau);
  std::vector<fs::path> inputs = as_paths(a.features);
  for (const auto& p : {a.replay, a.references, a.human, a.model}) inputs.emplace_back(p);
  if (!a.out.empty()) guard_output(a.out, inputs);

  if (!a.replay.empty()) {
    if (!a.systems_dir.empty() || !a.model.empty()) {
      throw UsageError("--replay cannot be combined with --systems-dir or --model");
    }
    RankReport report = build_report(load_score_table_csv(a.replay), variant);
    report.notes.push_back("replayed stored columns; no metric was recomputed");
    emit_report(report, a.out, json);
    return 0;
  }
  if (a.systems_dir.empty() || a.references.empty() || a.human.empty()) {
    throw UsageError("bench needs --replay, or all of --systems-dir, --references and --human");
  }
  if (a.model.empty() != a.features.empty()) throw UsageError("--model and --features go together");

  auto [runs, human] = load_systems(a.systems_dir, a.human);
  const auto refs = load_references(a.references);
  const std::vector<Metric> metrics = parse_metrics(a.metrics);

  std::optional<Checkpoint> ckpt;
  FeatureBank bank;
  ScoringModel model;
  if (!a.model.empty()) {
    ckpt = load_checkpoint(a.model);
    bank = load_bank(as_paths(a.features));
    model.config = ckpt->config;
    model.params = ckpt->params;
    model.bank = &bank;
  }
  spdlog::info("benchmarking {} systems over {} images", runs.size(), runs.front().outputs.size());
  const RankReport report =
      run_benchmark(runs, refs, human, metrics, ckpt ? &model : nullptr, variant);
  emit_report(report, a.out, json);
  return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  DataArgs data;
  TrainConfig train;
  ModelArgs model;
  std::string out_dir, systems_dir, references, human;
};

struct Variant {
  const char* id;
  const char* label;
  bool image;
  bool coherence;
};

constexpr Variant kVariants[] = {
    {"full", "Full", true, true},
    {"no_image", "No I", false, true},
    {"no_coherence", "No c", true, false},
    {"no_image_no_coherence", "No I & c", false, false},
};

int run_ablate(const AblateArgs& a, bool json) {
  if (a.model.no_image || a.model.no_coherence) {
    throw UsageError("ablate runs every input configuration; drop --no-image/--no-coherence");
  }
  const bool with_bench = !a.systems_dir.empty();
  if (with_bench && (a.references.empty() || a.human.empty())) {
    throw UsageError("--systems-dir needs --references and --human");
  }
  const Dataset ds = load_dataset(a.data.data);
  const FeatureBank bank = load_bank(as_paths(a.data.features));
  const auto [train_set, val_set] = make_split(ds, a.data, a.train.seed);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);

  std::optional<std::pair<std::vector<SystemRun>, std::vector<double>>> systems;
  std::map<std::string, std::string> refs;
  if (with_bench) {
    systems = load_systems(a.systems_dir, a.human);
    refs = load_references(a.references);
  }

  ordered_json summary = ordered_json::array();
  for (const Variant& v : kVariants) {
    ModelArgs margs = a.model;
    margs.no_image = !v.image;
    margs.no_coherence = !v.coherence;
    const ModelConfig mcfg = model_config(margs, ds, bank);
    spdlog::info("ablation {}: {} parameters", v.label, param_count(mcfg));
    const TrainResult r = train(train_set, val_set, bank, mcfg, a.train);
    log_history(r.history);
    const Evaluation e = evaluate(r.params, mcfg, val_set, bank);

    const fs::path model_path = dir / (std::string(v.id) + ".csmc");
    {
      auto out = open_out(model_path);
      write_checkpoint(Checkpoint{mcfg, r.params}, out);
    }
    {
      auto out = open_out(dir / (std::string(v.id) + ".history.jsonl"));
      r.history.write_jsonl(out);
    }

    ordered_json rep;
    rep["configuration"] = v.label;
    rep["use_image"] = v.image;
    rep["use_coherence"] = v.coherence;
    rep["parameters"] = param_count(mcfg);
    rep["training"] = history_summary(r.history);
    rep["validation"] = evaluation_json(e);
    rep["model"] = model_path.string();
    if (systems) {
      ScoringModel sm{mcfg, r.params, &bank, CoherenceLabel::Visible, "cosmic"};
      const RankReport br = run_benchmark(systems->first, refs, systems->second, {}, &sm);
      rep["benchmark_tau"] = br.taus.at("cosmic");
      rep["benchmark"] = report_to_json(br);
    }
    auto out = open_out(dir / (std::string(v.id) + ".json"));
    out << rep.dump(2) << '\n';
    if (!out) throw Error("write failed in " + dir.string());
    summary.push_back(rep);
  }
  {
    auto out = open_out(dir / "ablation.json");
    out << summary.dump(2) << '\n';
  }

  if (json) {
    print_json(summary);
    return 0;
  }
  std::printf("%-10s %10s %8s %12s %8s%s\n", "config", "params", "epochs", "val MSE", "tau-b",
              systems ? "   bench tau" : "");
  for (const auto& rep : summary) {
    const auto& val = rep["validation"];
    const std::string tau = val["tau_b"].is_null() ? "-" : fixed(val["tau_b"].get<double>());
    std::printf("%-10s %10lld %8d %12.6f %8s", rep["configuration"].get<std::string>().c_str(),
                static_cast<long long>(rep["parameters"].get<std::int64_t>()),
                rep["training"]["epochs"].get<int>(), val["mse"].get<double>(), tau.c_str());
    if (systems) std::printf("   %9s", fixed(rep["benchmark_tau"].get<double>()).c_str());
    std::printf("\n");
  }
  std::cout << "reports written to " << dir.string() << '\n';
  return 0;
}

CLI::App* deepest_parsed(CLI::App* app) {
  for (CLI::App* sub : app->get_subcommands()) return deepest_parsed(sub);
  return app;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned caption evaluation: features, training, scoring, augmentation, benchmarks"};
  app.name("cosmic");
  app.require_subcommand(1);
  app.fallthrough();
  bool json = false;
  app.add_flag("--json", json, "machine-readable JSON on stdout");

  auto* features = app.add_subcommand("features", "feature stores");
  features->require_subcommand(1);
  SynthArgs synth;
  auto* synth_cmd = features->add_subcommand("synth", "deterministic pseudo-random feature store");
  synth_cmd->add_option("--keys", synth.keys_file, "file with one raw key per line");
  synth_cmd->add_option("--data", synth.data, "take keys from rated samples (JSONL)");
  synth_cmd->add_option("--systems-dir", synth.systems_dir, "take keys from system outputs");
  synth_cmd->add_option("--references", synth.references, "take keys from references (JSONL)");
  synth_cmd->add_option("--modality", synth.modality, "which keys --data/--systems-dir/--references give")
      ->check(CLI::IsMember({"image", "text"}))
      ->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "vector length")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "generator seed")->required();
  synth_cmd->add_option("--out", synth.out, "output store")->required();
  std::string inspect_path;
  int inspect_show = 5;
  auto* inspect_cmd = features->add_subcommand("inspect", "summarize a feature store");
  inspect_cmd->add_option("store", inspect_path, "store to read")->required();
  inspect_cmd->add_option("--show", inspect_show, "keys to list")->capture_default_str();

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "fit a scoring model");
  add_data_options(train_cmd, targs.data);
  add_train_options(train_cmd, targs.train, targs.model);
  train_cmd->add_option("--out-model", targs.out_model, "checkpoint to write")->required();
  train_cmd->add_option("--history", targs.history, "per-epoch losses (JSONL)");

  ScoreArgs sargs;
  auto* score_cmd = app.add_subcommand("score", "score rated samples with a trained model");
  score_cmd->add_option("--model", sargs.model, "checkpoint")->required();
  score_cmd->add_option("--features", sargs.features, "feature store (repeatable)")->required();
  score_cmd->add_option("--data", sargs.data, "samples (JSONL)")->required();
  score_cmd->add_option("--out", sargs.out, "per-sample scores (JSONL)")->required();

  AugmentArgs aargs;
  auto* augment_cmd = app.add_subcommand("augment", "add mismatched negatives to balance class means");
  augment_cmd->add_option("--data", aargs.data, "rated samples (JSONL)")->required();
  augment_cmd->add_option("--tolerance", aargs.tolerance, "allowed gap to the target mean")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  augment_cmd->add_option("--target", aargs.target, "target class mean; default: the lowest class mean")
      ->check(CLI::Range(0.0, 1.0));
  augment_cmd->add_option("--seed", aargs.seed, "sampling seed")->required();
  augment_cmd->add_option("--out", aargs.out, "augmented samples (JSONL)")->required();

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate the four input configurations");
  add_data_options(ablate_cmd, ab.data);
  add_train_options(ablate_cmd, ab.train, ab.model);
  ablate_cmd->add_option("--out-dir", ab.out_dir, "directory for models and reports")->required();
  ablate_cmd->add_option("--systems-dir", ab.systems_dir, "also benchmark each model on these systems");
  ablate_cmd->add_option("--references", ab.references, "references for --systems-dir (JSONL)");
  ablate_cmd->add_option("--human", ab.human, "human system means (CSV: system,human)");

  BenchArgs bargs;
  auto* bench_cmd = app.add_subcommand("bench", "rank metrics by agreement with human system means");
  bench_cmd->add_option("--replay", bargs.replay, "stored score table (CSV) to re-rank");
  bench_cmd->add_option("--systems-dir", bargs.systems_dir, "directory of system output files (*.json)");
  bench_cmd->add_option("--references", bargs.references, "reference captions (JSONL)");
  bench_cmd->add_option("--human", bargs.human, "human system means (CSV: system,human)");
  bench_cmd->add_option("--metrics", bargs.metrics, "n-gram metrics to compute")->delimiter(',');
  bench_cmd->add_option("--model", bargs.model, "trained checkpoint to add as a column");
  bench_cmd->add_option("--features", bargs.features, "feature store for --model (repeatable)");
  bench_cmd->add_option("--out", bargs.out, "write the JSON report here");
  bench_cmd->add_option("--tau-variant", bargs.tau, "Kendall variant")
      ->check(CLI::IsMember({"a", "b"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << deepest_parsed(&app)->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << deepest_parsed(&app)->help();
    return kExitUsage;
  }

  CLI::App* verb = deepest_parsed(&app);
  try {
    configure_logging();
    if (verb == synth_cmd) {
      if (synth.keys_file.empty() && synth.data.empty() && synth.systems_dir.empty() &&
          synth.references.empty()) {
        throw UsageError("give at least one of --keys, --data, --systems-dir, --references");
      }
      return run_synth(synth, json);
    }
    if (verb == inspect_cmd) return run_inspect(inspect_path, inspect_show, json);
    if (verb == train_cmd) return run_train(targs, json);
    if (verb == score_cmd) return run_score(sargs, json);
    if (verb == augment_cmd) return run_augment(aargs, json);
    if (verb == ablate_cmd) return run_ablate(ab, json);
    if (verb == bench_cmd) return run_bench(bargs, json);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << verb->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
