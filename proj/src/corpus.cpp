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

#include "cosmic/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cosmic/error.hpp"
#include "cosmic/rng.hpp"

namespace cosmic {

namespace {

using nlohmann::json;

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw Error(line_prefix(line) + "missing field \"" + field + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) throw Error(line_prefix(line) + "field \"" + field + "\" must be a string");
  return v.get<std::string>();
}

CoherenceLabel require_label(const json& obj, const char* field, std::size_t line) {
  const std::string name = require_string(obj, field, line);
  try {
    return parse_label(name);
  } catch (const Error& e) {
    throw Error(line_prefix(line) + e.what());
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(CoherenceLabel label) noexcept {
  switch (label) {
    case CoherenceLabel::Meta: return "Meta";
    case CoherenceLabel::Visible: return "Visible";
    case CoherenceLabel::Subjective: return "Subjective";
    case CoherenceLabel::Story: return "Story";
  }
  return "?";
}

CoherenceLabel parse_label(std::string_view name) {
  for (CoherenceLabel label : kAllLabels) {
    if (to_string(label) == name) return label;
  }
  throw Error("unknown coherence label \"" + std::string(name) +
              "\" (expected Meta, Visible, Subjective or Story)");
}

double normalize_rating(int rating) {
  if (rating < 1 || rating > 5) {
    throw Error("rating " + std::to_string(rating) + " outside 1..5");
  }
  return (rating - 1) / 4.0;
}

Dataset parse_dataset(std::istream& in, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(line_prefix(line) + "malformed JSON: " + e.what());
    }
    if (!obj.is_object()) throw Error(line_prefix(line) + "expected a JSON object");

    RatedSample s;
    s.image_key = require_string(obj, "image_key", line);
    if (s.image_key.empty()) throw Error(line_prefix(line) + "empty image_key");
    s.generated.text = require_string(obj, "gen_text", line);
    s.generated.label = require_label(obj, "gen_label", line);
    s.reference.text = require_string(obj, "ref_text", line);
    s.reference.label = require_label(obj, "ref_label", line);
    if (blank(s.generated.text) || blank(s.reference.text)) {
      throw Error(line_prefix(line) + "caption text is empty");
    }

    const json& rating = require(obj, "rating", line);
    if (!rating.is_number_integer()) throw Error(line_prefix(line) + "rating must be an integer");
    const auto r = rating.get<long long>();
    if (r < 1 || r > 5) {
      throw Error(line_prefix(line) + "rating " + std::to_string(r) + " outside 1..5");
    }
    s.rating = static_cast<int>(r);
    s.target = normalize_rating(s.rating);

    if (auto it = obj.find("split"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(line_prefix(line) + "field \"split\" must be a string");
      s.split = it->get<std::string>();
    }
    if (auto it = obj.find("negative"); it != obj.end()) {
      if (!it->is_boolean()) throw Error(line_prefix(line) + "field \"negative\" must be a boolean");
      s.negative = it->get<bool>();
      if (s.negative) s.target = 0.0;
    }
    ds.samples.push_back(std::move(s));
  }
  if (in.bad()) throw Error("read error after line " + std::to_string(line));
  return ds;
}

void serialize_dataset(const Dataset& ds, std::ostream& out) {
  for (const RatedSample& s : ds.samples) {
    // ordered_json keeps the documented field order on disk.
    nlohmann::ordered_json obj;
    obj["image_key"] = s.image_key;
    obj["gen_text"] = s.generated.text;
    obj["gen_label"] = to_string(s.generated.label);
    obj["ref_text"] = s.reference.text;
    obj["ref_label"] = to_string(s.reference.label);
    obj["rating"] = s.rating;
    if (s.split) obj["split"] = *s.split;
    if (s.negative) obj["negative"] = true;
    out << obj.dump() << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return parse_dataset(in, path.stem().string());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  serialize_dataset(ds, out);
  if (!out) throw Error("write failed for " + path.string());
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double val_fraction,
                                          std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw UsageError("validation fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  if (n < 2) throw Error("cannot split a dataset of " + std::to_string(n) + " sample(s)");

  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(derive_seed(seed, 0x73706c6974ULL));  // "split"
  shuffle(order, rng);

  std::vector<bool> is_val(n, false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;

  Dataset train{ds.name + ".train", {}};
  Dataset val{ds.name + ".val", {}};
  for (std::size_t i = 0; i < n; ++i) {
    (is_val[i] ? val : train).samples.push_back(ds.samples[i]);
  }
  return {std::move(train), std::move(val)};
}

std::pair<Dataset, Dataset> split_by_field(const Dataset& ds) {
  Dataset train{ds.name + ".train", {}};
  Dataset val{ds.name + ".val", {}};
  for (const RatedSample& s : ds.samples) {
    (s.split && *s.split == "val" ? val : train).samples.push_back(s);
  }
  return {std::move(train), std::move(val)};
}

std::map<CoherenceLabel, double> class_means(const Dataset& ds, CaptionSide by) {
  std::map<CoherenceLabel, std::pair<double, std::size_t>> acc;
  for (const RatedSample& s : ds.samples) {
    const CoherenceLabel label =
        by == CaptionSide::Generated ? s.generated.label : s.reference.label;
    auto& [sum, count] = acc[label];
    sum += s.target;
    ++count;
  }
  std::map<CoherenceLabel, double> means;
  for (const auto& [label, sc] : acc) means[label] = sc.first / static_cast<double>(sc.second);
  return means;
}

SystemRun parse_system_run(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed system file: ") + e.what());
  }
  if (!doc.is_object()) throw Error("system file must hold a JSON object");
  SystemRun run;
  auto name = doc.find("system");
  if (name == doc.end() || !name->is_string()) throw Error("system file lacks \"system\" name");
  run.system_name = name->get<std::string>();
  auto coh = doc.find("coherence");
  if (coh == doc.end() || !coh->is_string()) {
    throw Error("system " + run.system_name + " lacks \"coherence\" label");
  }
  run.coherence = parse_label(coh->get<std::string>());
  auto outputs = doc.find("outputs");
  if (outputs == doc.end() || !outputs->is_array()) {
    throw Error("system " + run.system_name + " lacks \"outputs\" array");
  }
  for (const json& item : *outputs) {
    if (!item.is_object() || !item.contains("image_key") || !item.contains("text") ||
        !item["image_key"].is_string() || !item["text"].is_string()) {
      throw Error("system " + run.system_name + ": each output needs image_key and text strings");
    }
    auto key = item["image_key"].get<std::string>();
    if (!run.outputs.emplace(key, item["text"].get<std::string>()).second) {
      throw Error("system " + run.system_name + ": image key \"" + key + "\" appears twice");
    }
  }
  return run;
}

SystemRun load_system_run(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return parse_system_run(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void serialize_system_run(const SystemRun& run, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["system"] = run.system_name;
  doc["coherence"] = to_string(run.coherence);
  doc["outputs"] = nlohmann::ordered_json::array();
  for (const auto& [key, text] : run.outputs) {
    doc["outputs"].push_back({{"image_key", key}, {"text", text}});
  }
  out << doc.dump(1) << '\n';
}

std::map<std::string, std::string> parse_references(std::istream& in) {
  std::map<std::string, std::string> refs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(line_prefix(line) + "malformed JSON: " + e.what());
    }
    if (!obj.is_object()) throw Error(line_prefix(line) + "expected a JSON object");
    auto key = require_string(obj, "image_key", line);
    auto caption = require_string(obj, "text", line);
    if (!refs.emplace(key, std::move(caption)).second) {
      throw Error(line_prefix(line) + "duplicate reference for \"" + key + "\"");
    }
  }
  return refs;
}

std::map<std::string, std::string> load_references(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return parse_references(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace cosmic
