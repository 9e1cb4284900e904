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

#include "cosmic/bench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "cosmic/error.hpp"
#include "cosmic/train.hpp"

namespace cosmic {

double system_score(std::span<const double> per_sample) {
  if (per_sample.empty()) throw Error("cannot average an empty score list");
  return std::accumulate(per_sample.begin(), per_sample.end(), 0.0) /
         static_cast<double>(per_sample.size());
}

namespace {

// Pairs (i < j) tied within each run of equal values of `v`, v sorted.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq&& equal) {
  std::int64_t ties = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      ties += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

// Stable merge sort counting strict inversions.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

PairCounts kendall_pair_counts(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw UsageError("Kendall tau needs equal-length vectors (got " + std::to_string(x.size()) +
                     " and " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw UsageError("Kendall tau needs at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw Error("Kendall tau input contains NaN");
  }

  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  PairCounts pc;
  pc.pairs = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  pc.tied_x = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
  pc.tied_both = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]];
  });

  std::vector<double> ys(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  pc.discordant = merge_count(ys, scratch, 0, n);
  pc.tied_y = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  pc.concordant = pc.pairs - pc.tied_x - pc.tied_y + pc.tied_both - pc.discordant;
  return pc;
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  const PairCounts pc = kendall_pair_counts(x, y);
  const auto left = static_cast<double>(pc.pairs - pc.tied_x);
  const auto right = static_cast<double>(pc.pairs - pc.tied_y);
  if (left == 0.0 || right == 0.0) throw Error("Kendall tau-b undefined: an input is constant");
  return static_cast<double>(pc.concordant - pc.discordant) / std::sqrt(left * right);
}

double kendall_tau_a(std::span<const double> x, std::span<const double> y) {
  const PairCounts pc = kendall_pair_counts(x, y);
  return static_cast<double>(pc.concordant - pc.discordant) / static_cast<double>(pc.pairs);
}

double kendall_tau(std::span<const double> x, std::span<const double> y, TauVariant variant) {
  return variant == TauVariant::B ? kendall_tau_b(x, y) : kendall_tau_a(x, y);
}

const std::vector<std::string>& canonical_system_order() {
  static const std::vector<std::string> order = {
      "Base-Visible", "Base-Meta", "Base-Subjective", "Base-Story",
      "Lite-Visible", "Lite-Meta", "Lite-Subjective", "Lite-Story"};
  return order;
}

void SystemScoreTable::validate() const {
  if (systems.empty()) throw Error("score table has no systems");
  if (human.size() != systems.size()) {
    throw Error("human column has " + std::to_string(human.size()) + " values for " +
                std::to_string(systems.size()) + " systems");
  }
  for (const auto& [name, values] : columns) {
    if (values.size() != systems.size()) {
      throw Error("column " + name + " has " + std::to_string(values.size()) + " values for " +
                  std::to_string(systems.size()) + " systems");
    }
  }
}

bool is_model_column(const std::string& name) { return name.rfind("cosmic", 0) == 0; }

RankReport build_report(const SystemScoreTable& table, TauVariant variant) {
  table.validate();
  RankReport report;
  report.table = table;
  report.variant = variant;
  if (std::adjacent_find(table.human.begin(), table.human.end(), std::not_equal_to<>()) ==
      table.human.end()) {
    throw Error("human means are identical for every system; no ranking to compare against");
  }
  double best = -2.0;
  for (const auto& [name, values] : table.columns) {
    if (std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end()) {
      report.undefined.push_back(name);
      continue;
    }
    const double tau = kendall_tau(values, table.human, variant);
    report.taus[name] = tau;
    // Map order is lexicographic, so strict '>' keeps the smallest name on ties.
    if (tau > best) {
      best = tau;
      report.best_metric = name;
    }
  }
  return report;
}

std::vector<double> score_system(const ScoringModel& model, const SystemRun& system,
                                 const std::map<std::string, std::string>& references) {
  if (!model.bank) throw UsageError("model scoring needs a feature bank");
  Dataset ds;
  ds.name = system.system_name;
  for (const auto& [key, text] : system.outputs) {
    auto it = references.find(key);
    if (it == references.end()) {
      throw Error("system " + system.system_name + ": no reference for image \"" + key + "\"");
    }
    RatedSample s;
    s.image_key = key;
    s.generated = CaptionRecord{text, system.coherence};
    s.reference = CaptionRecord{it->second, model.reference_label};
    ds.samples.push_back(std::move(s));
  }
  const SampleBatch batch = assemble_batch(ds, *model.bank, model.config);
  const Eigen::RowVectorXd raw = predict(model.params, model.config, batch);
  return std::vector<double>(raw.data(), raw.data() + raw.size());
}

RankReport run_benchmark(const std::vector<SystemRun>& systems,
                         const std::map<std::string, std::string>& references,
                         const std::vector<double>& human_means,
                         const std::vector<Metric>& metrics, const ScoringModel* model,
                         TauVariant variant) {
  if (systems.empty()) throw Error("benchmark needs at least one system");
  if (human_means.size() != systems.size()) {
    throw Error("got " + std::to_string(human_means.size()) + " human means for " +
                std::to_string(systems.size()) + " systems");
  }
  for (const SystemRun& s : systems) {
    if (s.outputs.size() != systems.front().outputs.size() ||
        !std::equal(s.outputs.begin(), s.outputs.end(), systems.front().outputs.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw Error("system " + s.system_name + " does not cover the same images as " +
                  systems.front().system_name);
    }
  }

  SystemScoreTable table;
  table.human = human_means;
  for (const SystemRun& s : systems) table.systems.push_back(s.system_name);
  for (Metric m : metrics) {
    auto& column = table.columns[std::string(metric_name(m))];
    for (const SystemRun& s : systems) column.push_back(evaluate_pairs(m, s, references).corpus);
  }

  std::map<std::string, std::vector<double>> presented;
  if (model) {
    auto& column = table.columns[model->column];
    auto& shown = presented[model->column];
    for (const SystemRun& s : systems) {
      std::vector<double> raw = score_system(*model, s, references);
      column.push_back(system_score(raw));
      for (double& v : raw) v = presented_score(v);
      shown.push_back(system_score(raw));
    }
  }

  RankReport report = build_report(table, variant);
  report.presented = std::move(presented);
  report.unavailable = {"meteor", "spice", "bleurt", "bertscoreF"};
  report.notes.push_back("BLEU columns are corpus-level BLEU over each system's outputs");
  return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

SystemScoreTable parse_score_table_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  SystemScoreTable table;
  std::size_t human_col = 0, system_col = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = fields;
      auto find = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(std::string("score table lacks a \"") + name + "\" column");
        return static_cast<std::size_t>(it - header.begin());
      };
      system_col = find("system");
      human_col = find("human");
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != system_col && i != human_col) table.columns[header[i]];
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                  " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i == system_col) {
        table.systems.push_back(fields[i]);
        continue;
      }
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error("line " + std::to_string(line_no) + ": \"" + fields[i] + "\" is not a number");
      }
      if (i == human_col) {
        table.human.push_back(v);
      } else {
        table.columns[header[i]].push_back(v);
      }
    }
  }
  if (header.empty()) throw Error("score table is empty");
  table.validate();
  return table;
}

SystemScoreTable load_score_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_score_table_csv(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json report_to_json(const RankReport& report) {
  nlohmann::ordered_json j;
  j["systems"] = report.table.systems;
  j["human"] = report.table.human;
  j["columns"] = nlohmann::ordered_json::object();
  for (const auto& [name, values] : report.table.columns) j["columns"][name] = values;
  if (!report.presented.empty()) {
    j["presented"] = nlohmann::ordered_json::object();
    for (const auto& [name, values] : report.presented) j["presented"][name] = values;
  }
  j["tau_variant"] = report.variant == TauVariant::B ? "b" : "a";
  j["taus"] = nlohmann::ordered_json::object();
  for (const auto& [name, values] : report.table.columns) {
    auto it = report.taus.find(name);
    j["taus"][name] = it == report.taus.end() ? nlohmann::ordered_json() : nlohmann::ordered_json(it->second);
  }
  j["best_metric"] = report.best_metric;
  if (!report.unavailable.empty()) j["unavailable"] = report.unavailable;
  if (!report.notes.empty()) j["notes"] = report.notes;
  return j;
}

void write_report_text(const RankReport& report, std::ostream& out) {
  const auto& t = report.table;
  std::size_t name_w = std::string("system").size();
  for (const auto& s : t.systems) name_w = std::max(name_w, s.size());
  name_w = std::max(name_w, std::string("Kendall tau-b").size());

  std::vector<std::string> cols = {"human"};
  for (const auto& [name, values] : t.columns) cols.push_back(name);
  std::vector<std::size_t> widths;
  for (const auto& c : cols) widths.push_back(std::max<std::size_t>(c.size(), 7));

  auto cell = [&](std::size_t i, const std::string& text) {
    out << "  " << std::setw(static_cast<int>(widths[i])) << text;
  };
  auto num = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
  };

  out << std::left << std::setw(static_cast<int>(name_w)) << "system" << std::right;
  for (std::size_t i = 0; i < cols.size(); ++i) cell(i, cols[i]);
  out << '\n';
  for (std::size_t r = 0; r < t.systems.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(name_w)) << t.systems[r] << std::right;
    cell(0, num(t.human[r]));
    std::size_t i = 1;
    for (const auto& [name, values] : t.columns) cell(i++, num(values[r]));
    out << '\n';
  }
  out << std::left << std::setw(static_cast<int>(name_w))
      << (report.variant == TauVariant::B ? "Kendall tau-b" : "Kendall tau-a") << std::right;
  cell(0, num(1.0));
  std::size_t i = 1;
  for (const auto& [name, values] : t.columns) {
    auto it = report.taus.find(name);
    cell(i++, it == report.taus.end() ? "-" : num(it->second));
  }
  out << '\n';
  out << "best: " << report.best_metric << '\n';
  for (const auto& [name, values] : report.presented) {
    out << name << " clamped to [0,1]:";
    for (double v : values) out << ' ' << num(v);
    out << '\n';
  }
  if (!report.unavailable.empty()) {
    out << "unavailable:";
    for (const auto& u : report.unavailable) out << ' ' << u;
    out << '\n';
  }
  if (!report.undefined.empty()) {
    out << "constant across systems, tau undefined:";
    for (const auto& u : report.undefined) out << ' ' << u;
    out << '\n';
  }
  for (const auto& note : report.notes) out << "note: " << note << '\n';
}

}  // namespace cosmic
