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

#ifndef COSMIC_BENCH_HPP
#define COSMIC_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosmic/corpus.hpp"
#include "cosmic/features.hpp"
#include "cosmic/model.hpp"
#include "cosmic/textmetrics.hpp"

namespace cosmic {

// Arithmetic mean; throws on an empty list.
double system_score(std::span<const double> per_sample);

// Pair statistics over all n(n-1)/2 index pairs.
struct PairCounts {
  std::int64_t pairs = 0;
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_x = 0;     // pairs tied in x (including those tied in both)
  std::int64_t tied_y = 0;     // pairs tied in y (including those tied in both)
  std::int64_t tied_both = 0;
};

// O(n log n) counts (Knight's method: sort by (x, y), then count the
// inversions of y with a merge sort).
PairCounts kendall_pair_counts(std::span<const double> x, std::span<const double> y);

// (C - D) / sqrt((n0 - n1)(n0 - n2)). Throws Error instead of returning NaN
// when either side is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// (C - D) / n0, kept for diagnostics.
double kendall_tau_a(std::span<const double> x, std::span<const double> y);

enum class TauVariant { B, A };

double kendall_tau(std::span<const double> x, std::span<const double> y, TauVariant variant);

// The eight coherence-conditioned systems in reporting order.
const std::vector<std::string>& canonical_system_order();

struct SystemScoreTable {
  std::vector<std::string> systems;
  std::map<std::string, std::vector<double>> columns;  // metric -> one value per system
  std::vector<double> human;

  void validate() const;
};

struct RankReport {
  SystemScoreTable table;
  TauVariant variant = TauVariant::B;
  std::map<std::string, double> taus;
  std::string best_metric;
  // Columns constant across systems; their tau is undefined and left out of `taus`.
  std::vector<std::string> undefined;
  // Model columns averaged after clamping each score to [0, 1]; shown only.
  std::map<std::string, std::vector<double>> presented;
  std::vector<std::string> unavailable;
  std::vector<std::string> notes;
};

// Ties for the best tau go to the lexicographically smallest column name.
RankReport build_report(const SystemScoreTable& table, TauVariant variant = TauVariant::B);

// A trained metric plus the features it needs. System outputs are scored with
// the system's coherence label as the generated label and `reference_label`
// for the reference caption.
struct ScoringModel {
  ModelConfig config;
  ModelParams params;
  const FeatureBank* bank = nullptr;
  CoherenceLabel reference_label = CoherenceLabel::Visible;
  std::string column = "cosmic";
};

// Raw per-sample model scores for one system, in the system's key order.
std::vector<double> score_system(const ScoringModel& model, const SystemRun& system,
                                 const std::map<std::string, std::string>& references);

// Evaluates every metric (and the model, when given) for each system, then
// correlates each column with `human_means` (aligned with `systems`). BLEU
// columns hold corpus BLEU; other columns hold per-sample means.
RankReport run_benchmark(const std::vector<SystemRun>& systems,
                         const std::map<std::string, std::string>& references,
                         const std::vector<double>& human_means,
                         const std::vector<Metric>& metrics, const ScoringModel* model = nullptr,
                         TauVariant variant = TauVariant::B);

// Comma-separated: a header with "system", "human" and one column per metric,
// then one row per system. Lines starting with '#' are ignored.
SystemScoreTable parse_score_table_csv(std::istream& in);
SystemScoreTable load_score_table_csv(const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const RankReport& report);
void write_report_text(const RankReport& report, std::ostream& out);

bool is_model_column(const std::string& name);

}  // namespace cosmic

#endif  // COSMIC_BENCH_HPP
