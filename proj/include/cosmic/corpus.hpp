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

#ifndef COSMIC_CORPUS_HPP
#define COSMIC_CORPUS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cosmic {

// Image-caption coherence relation. The numeric values are the canonical
// one-hot indices.
enum class CoherenceLabel : std::uint8_t { Meta = 0, Visible = 1, Subjective = 2, Story = 3 };

inline constexpr std::size_t kNumLabels = 4;
inline constexpr std::array<CoherenceLabel, kNumLabels> kAllLabels = {
    CoherenceLabel::Meta, CoherenceLabel::Visible, CoherenceLabel::Subjective,
    CoherenceLabel::Story};

constexpr std::size_t label_index(CoherenceLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

std::string_view to_string(CoherenceLabel label) noexcept;

// Throws Error for anything outside the closed set of four names.
CoherenceLabel parse_label(std::string_view name);

struct CaptionRecord {
  std::string text;
  CoherenceLabel label = CoherenceLabel::Visible;

  bool operator==(const CaptionRecord&) const = default;
};

struct RatedSample {
  std::string image_key;
  CaptionRecord generated;
  CaptionRecord reference;
  int rating = 1;       // 1..5
  double target = 0.0;  // (rating - 1) / 4, or 0 for augmentation negatives
  bool negative = false;
  std::optional<std::string> split;  // "train" / "val" when the file assigns one

  bool operator==(const RatedSample&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<RatedSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  bool operator==(const Dataset&) const = default;
};

// Maps a 1..5 rating affinely onto [0, 1].
double normalize_rating(int rating);

// One JSON object per line:
//   {"image_key", "gen_text", "gen_label", "ref_text", "ref_label", "rating",
//    optional "split", optional "negative"}
// Blank lines are skipped. Errors name the 1-based line number.
Dataset parse_dataset(std::istream& in, std::string name = {});
void serialize_dataset(const Dataset& ds, std::ostream& out);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Seeded, disjoint, exhaustive split. Both halves keep the input order.
// Validation size is round(val_fraction * N) clamped to [1, N - 1].
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double val_fraction,
                                          std::uint64_t seed);

// Uses the samples' own "split" fields: "val" goes to validation, anything
// else to training.
std::pair<Dataset, Dataset> split_by_field(const Dataset& ds);

enum class CaptionSide { Generated, Reference };

// Mean target per coherence label of the chosen caption. Labels with no
// samples are absent.
std::map<CoherenceLabel, double> class_means(const Dataset& ds,
                                             CaptionSide by = CaptionSide::Generated);

// One captioning system's outputs over a test set.
struct SystemRun {
  std::string system_name;
  CoherenceLabel coherence = CoherenceLabel::Visible;
  std::map<std::string, std::string> outputs;  // image_key -> caption
};

// {"system": name, "coherence": label, "outputs": [{"image_key", "text"}, ...]}
// Every image key must appear exactly once.
SystemRun parse_system_run(std::istream& in);
SystemRun load_system_run(const std::filesystem::path& path);
void serialize_system_run(const SystemRun& run, std::ostream& out);

// Reference captions, one {"image_key", "text"} object per line.
std::map<std::string, std::string> parse_references(std::istream& in);
std::map<std::string, std::string> load_references(const std::filesystem::path& path);

}  // namespace cosmic

#endif  // COSMIC_CORPUS_HPP
