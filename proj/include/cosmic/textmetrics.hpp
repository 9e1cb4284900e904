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

#ifndef COSMIC_TEXTMETRICS_HPP
#define COSMIC_TEXTMETRICS_HPP

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cosmic/corpus.hpp"

namespace cosmic {

using TokenSeq = std::vector<std::string>;

// Lowercases (Unicode simple case mapping), deletes every Unicode punctuation
// code point, and splits on runs of white space. Invalid UTF-8 bytes act as
// separators.
TokenSeq tokenize(std::string_view text);

struct NGramCounts {
  int n = 1;
  std::map<std::vector<std::string>, int> counts;

  // Number of n-gram occurrences (sum of counts).
  long total() const noexcept;
};

// Throws UsageError for n < 1.
NGramCounts extract_ngrams(const TokenSeq& seq, int n);

// Corpus BLEU with one reference per candidate: clipped matches and n-gram
// totals are summed over the corpus before forming each precision, the
// precisions are combined by a uniform geometric mean over 1..max_n, and the
// brevity penalty is exp(1 - r/c) when c <= r. No smoothing: any zero
// precision makes the score 0.
double bleu_corpus(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references, int max_n);

// Single-pair BLEU (the one-element corpus).
double bleu_sentence(const TokenSeq& candidate, const TokenSeq& reference, int max_n);

inline constexpr double kRougeBeta = 1.2;

// LCS-based F-measure, F = (1 + b^2) P R / (R + b^2 P).
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

struct MetricScore {
  std::string name;
  std::vector<double> per_sample;
  double corpus = 0.0;
};

inline constexpr double kCiderSigma = 6.0;

// CIDEr-D over a single-reference corpus. Document frequency is counted over
// the references of `pairs`; n-grams never seen in a reference get df = 1.
// Score per pair = 10 * mean over n = 1..4 of the clipped TF-IDF cosine times
// exp(-(len_c - len_r)^2 / (2 sigma^2)), lengths in tokens.
MetricScore cider_d(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs);

enum class Metric { Bleu1, Bleu2, Bleu3, Bleu4, RougeL, CiderD };

// "bleu1" .. "bleu4", "rougeL", "ciderD".
std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);
std::vector<Metric> all_metrics();

// Scores every system output against its reference. Per-sample values follow
// the system's key order; the corpus value is corpus BLEU for BLEU, the mean
// of per-sample scores otherwise.
MetricScore evaluate_pairs(Metric metric, const SystemRun& system,
                           const std::map<std::string, std::string>& references);

}  // namespace cosmic

#endif  // COSMIC_TEXTMETRICS_HPP
