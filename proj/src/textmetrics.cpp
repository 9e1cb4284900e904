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

#include "cosmic/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "cosmic/error.hpp"

namespace cosmic {

TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };

  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0 || u_isUWhiteSpace(c) || u_isspace(c)) {
      flush();
      continue;
    }
    if (u_ispunct(c)) continue;
    c = u_tolower(c);
    char buf[U8_MAX_LENGTH];
    std::int32_t n = 0;
    U8_APPEND_UNSAFE(reinterpret_cast<std::uint8_t*>(buf), n, c);
    current.append(buf, static_cast<std::size_t>(n));
  }
  flush();
  return tokens;
}

long NGramCounts::total() const noexcept {
  long sum = 0;
  for (const auto& [gram, count] : counts) sum += count;
  return sum;
}

NGramCounts extract_ngrams(const TokenSeq& seq, int n) {
  if (n < 1) throw UsageError("n-gram order must be at least 1");
  NGramCounts out;
  out.n = n;
  const auto order = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + order <= seq.size(); ++i) {
    ++out.counts[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                          seq.begin() + static_cast<std::ptrdiff_t>(i + order))];
  }
  return out;
}

namespace {

long clipped_matches(const NGramCounts& cand, const NGramCounts& ref) {
  long matches = 0;
  for (const auto& [gram, count] : cand.counts) {
    auto it = ref.counts.find(gram);
    if (it != ref.counts.end()) matches += std::min(count, it->second);
  }
  return matches;
}

}  // namespace

double bleu_corpus(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references, int max_n) {
  if (max_n < 1 || max_n > 4) throw UsageError("BLEU order must be in 1..4");
  if (candidates.empty()) throw UsageError("BLEU needs at least one candidate");
  if (candidates.size() != references.size()) {
    throw UsageError("BLEU got " + std::to_string(candidates.size()) + " candidates and " +
                     std::to_string(references.size()) + " references");
  }

  std::vector<long> matches(static_cast<std::size_t>(max_n), 0);
  std::vector<long> totals(static_cast<std::size_t>(max_n), 0);
  double cand_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (int n = 1; n <= max_n; ++n) {
      const NGramCounts c = extract_ngrams(candidates[i], n);
      const NGramCounts r = extract_ngrams(references[i], n);
      matches[static_cast<std::size_t>(n - 1)] += clipped_matches(c, r);
      totals[static_cast<std::size_t>(n - 1)] += c.total();
    }
  }

  double log_sum = 0.0;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (matches[k] == 0 || totals[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[k]) / static_cast<double>(totals[k]));
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / max_n);
}

double bleu_sentence(const TokenSeq& candidate, const TokenSeq& reference, int max_n) {
  return bleu_corpus({candidate}, {reference}, max_n);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    }
    std::swap(prev, row);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

namespace {

constexpr int kCiderMaxN = 4;

struct TfIdfVector {
  std::map<std::vector<std::string>, double> weights;
  double norm = 0.0;
};

using DocFreq = std::map<std::vector<std::string>, int>;

TfIdfVector tfidf(const NGramCounts& counts, const DocFreq& df, double log_corpus) {
  TfIdfVector v;
  double sq = 0.0;
  for (const auto& [gram, tf] : counts.counts) {
    auto it = df.find(gram);
    const double d = it == df.end() ? 1.0 : static_cast<double>(it->second);
    const double w = tf * (log_corpus - std::log(d));
    v.weights.emplace(gram, w);
    sq += w * w;
  }
  v.norm = std::sqrt(sq);
  return v;
}

// Clipped cosine: sum_g min(c_g, r_g) * r_g / (|c| |r|).
double clipped_cosine(const TfIdfVector& c, const TfIdfVector& r) {
  if (c.norm == 0.0 || r.norm == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [gram, w] : c.weights) {
    auto it = r.weights.find(gram);
    if (it != r.weights.end()) dot += std::min(w, it->second) * it->second;
  }
  return dot / (c.norm * r.norm);
}

}  // namespace

MetricScore cider_d(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs) {
  if (pairs.empty()) throw UsageError("CIDEr-D needs at least one pair");

  std::vector<DocFreq> df(kCiderMaxN);
  std::vector<std::vector<NGramCounts>> ref_counts(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int n = 1; n <= kCiderMaxN; ++n) {
      ref_counts[i].push_back(extract_ngrams(pairs[i].second, n));
      for (const auto& [gram, tf] : ref_counts[i].back().counts) ++df[static_cast<std::size_t>(n - 1)][gram];
    }
  }
  const double log_corpus = std::log(static_cast<double>(pairs.size()));

  MetricScore out;
  out.name = "ciderD";
  out.per_sample.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [cand, ref] = pairs[i];
    const double delta = static_cast<double>(cand.size()) - static_cast<double>(ref.size());
    const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
    double sum = 0.0;
    for (int n = 1; n <= kCiderMaxN; ++n) {
      const auto& dfn = df[static_cast<std::size_t>(n - 1)];
      const TfIdfVector c = tfidf(extract_ngrams(cand, n), dfn, log_corpus);
      const TfIdfVector r = tfidf(ref_counts[i][static_cast<std::size_t>(n - 1)], dfn, log_corpus);
      sum += clipped_cosine(c, r) * penalty;
    }
    out.per_sample.push_back(10.0 * sum / kCiderMaxN);
  }
  out.corpus = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) /
               static_cast<double>(out.per_sample.size());
  return out;
}

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::Bleu1: return "bleu1";
    case Metric::Bleu2: return "bleu2";
    case Metric::Bleu3: return "bleu3";
    case Metric::Bleu4: return "bleu4";
    case Metric::RougeL: return "rougeL";
    case Metric::CiderD: return "ciderD";
  }
  return "?";
}

std::vector<Metric> all_metrics() {
  return {Metric::Bleu1, Metric::Bleu2, Metric::Bleu3, Metric::Bleu4, Metric::RougeL, Metric::CiderD};
}

Metric parse_metric(std::string_view name) {
  for (Metric m : all_metrics()) {
    if (metric_name(m) == name) return m;
  }
  throw UsageError("unknown metric \"" + std::string(name) +
                   "\" (expected bleu1, bleu2, bleu3, bleu4, rougeL or ciderD)");
}

MetricScore evaluate_pairs(Metric metric, const SystemRun& system,
                           const std::map<std::string, std::string>& references) {
  std::vector<TokenSeq> cands;
  std::vector<TokenSeq> refs;
  cands.reserve(system.outputs.size());
  refs.reserve(system.outputs.size());
  for (const auto& [key, text] : system.outputs) {
    auto it = references.find(key);
    if (it == references.end()) {
      throw Error("system " + system.system_name + ": no reference for image \"" + key + "\"");
    }
    cands.push_back(tokenize(text));
    refs.push_back(tokenize(it->second));
  }
  if (cands.empty()) throw Error("system " + system.system_name + " has no outputs");

  MetricScore out;
  out.name = std::string(metric_name(metric));
  switch (metric) {
    case Metric::Bleu1:
    case Metric::Bleu2:
    case Metric::Bleu3:
    case Metric::Bleu4: {
      const int n = static_cast<int>(metric) - static_cast<int>(Metric::Bleu1) + 1;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        out.per_sample.push_back(bleu_sentence(cands[i], refs[i], n));
      }
      out.corpus = bleu_corpus(cands, refs, n);
      return out;
    }
    case Metric::RougeL: {
      for (std::size_t i = 0; i < cands.size(); ++i) out.per_sample.push_back(rouge_l(cands[i], refs[i]));
      out.corpus = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) /
                   static_cast<double>(out.per_sample.size());
      return out;
    }
    case Metric::CiderD: {
      std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
      for (std::size_t i = 0; i < cands.size(); ++i) pairs.emplace_back(std::move(cands[i]), std::move(refs[i]));
      MetricScore s = cider_d(pairs);
      return s;
    }
  }
  return out;
}

}  // namespace cosmic
