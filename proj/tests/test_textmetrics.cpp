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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "cosmic/error.hpp"
#include "cosmic/rng.hpp"
#include "cosmic/textmetrics.hpp"

using namespace cosmic;

namespace {

TokenSeq random_seq(SplitMix64& rng, std::size_t vocab, std::size_t max_len) {
  TokenSeq s(rng.below(max_len) + 1);
  for (auto& t : s) t = "w" + std::to_string(rng.below(vocab));
  return s;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("A pink flower.") == TokenSeq{"a", "pink", "flower"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Man's  hat") == TokenSeq{"mans", "hat"});
  CHECK(tokenize("  \t\n ").empty());
  CHECK(tokenize("Caf\xc3\x89 \xe2\x80\x94 \xc2\xab" "D\xc3\xa9j\xc3\xa0\xc2\xbb") == TokenSeq{"caf\xc3\xa9", "d\xc3\xa9j\xc3\xa0"});
  CHECK(tokenize("non\xc2\xa0" "breaking") == TokenSeq{"non", "breaking"});
  CHECK(tokenize("well-known, state-of-the-art!") == TokenSeq{"wellknown", "stateoftheart"});
  for (const auto& t : tokenize("Some   Mixed\tCASE text, here.")) {
    CHECK_FALSE(t.empty());
    CHECK(t.find(' ') == std::string::npos);
  }
}

TEST_CASE("extract_ngrams") {
  const TokenSeq s = {"a", "b", "a"};
  const auto uni = extract_ngrams(s, 1);
  CHECK(uni.counts.size() == 2);
  CHECK(uni.counts.at({"a"}) == 2);
  CHECK(uni.counts.at({"b"}) == 1);
  const auto bi = extract_ngrams(s, 2);
  CHECK(bi.counts.size() == 2);
  CHECK(bi.counts.at({"a", "b"}) == 1);
  CHECK(bi.counts.at({"b", "a"}) == 1);
  CHECK(extract_ngrams({"a"}, 2).counts.empty());
  CHECK_THROWS_AS(extract_ngrams(s, 0), UsageError);

  SplitMix64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const TokenSeq q = random_seq(rng, 4, 10);
    for (int n = 1; n <= 4; ++n) {
      CHECK(extract_ngrams(q, n).total() == std::max<long>(0, static_cast<long>(q.size()) - n + 1));
    }
  }
}

TEST_CASE("bleu_corpus") {
  const TokenSeq sat = {"the", "cat", "sat"};
  CHECK(bleu_corpus({sat}, {sat}, 2) == doctest::Approx(1.0).epsilon(1e-12));
  // Clipped unigram precision 1/3, no brevity penalty since c = 3 > r = 2.
  CHECK(bleu_corpus({{"the", "the", "the"}}, {{"the", "cat"}}, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(bleu_corpus({{"a", "b"}}, {{"c", "d"}}, 1) == 0.0);
  // Short candidate: p1 = 1, BP = exp(1 - 4/2).
  CHECK(bleu_corpus({{"a", "b"}}, {{"a", "b", "c", "d"}}, 1) == doctest::Approx(std::exp(-1.0)));
  // Pooled corpus statistics, not an average of sentence scores:
  // matches 2+0 over 2+2 candidate unigrams, c = r = 4.
  CHECK(bleu_corpus({{"a", "b"}, {"x", "y"}}, {{"a", "b"}, {"p", "q"}}, 1) == doctest::Approx(0.5));
  // No bigram overlap at all means zero without smoothing.
  CHECK(bleu_corpus({{"a", "b"}}, {{"b", "a"}}, 2) == 0.0);
  CHECK_THROWS_AS(bleu_corpus({sat}, {}, 1), UsageError);
  CHECK_THROWS_AS(bleu_corpus({}, {}, 1), UsageError);
  CHECK_THROWS_AS(bleu_corpus({sat}, {sat}, 5), UsageError);
}

TEST_CASE("rouge_l") {
  CHECK(rouge_l({"a", "b"}, {"a", "b"}) == doctest::Approx(1.0));
  // LCS 3, P = 0.75, R = 1: F = 2.44 * 0.75 / (1 + 1.44 * 0.75).
  CHECK(rouge_l({"a", "b", "c", "d"}, {"a", "c", "d"}) == doctest::Approx(1.83 / 2.08).epsilon(1e-12));
  CHECK(rouge_l({"a", "b", "c", "d"}, {"a", "c", "d"}) == doctest::Approx(0.8798).epsilon(1e-4));
  CHECK(rouge_l({"a"}, {"b"}) == 0.0);
  CHECK(rouge_l({}, {"b"}) == 0.0);
  CHECK(rouge_l({"a", "b", "c", "d"}, {"a", "c", "d"}) != rouge_l({"a", "c", "d"}, {"a", "b", "c", "d"}));

  SplitMix64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const TokenSeq c = random_seq(rng, 3, 6);
    const TokenSeq r = random_seq(rng, 3, 6);
    const double f = rouge_l(c, r);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0 + 1e-12);
    CHECK((std::abs(f - 1.0) < 1e-12) == (c == r));
    CHECK((std::abs(rouge_l(r, c) - 1.0) < 1e-12) == (c == r));
  }
}

TEST_CASE("cider_d") {
  SUBCASE("two identical pairs") {
    // "a" appears in both references so its idf is 0; "cat", "dog" and the
    // bigrams have idf ln 2; higher orders are empty.
    const auto s = cider_d({{{"a", "cat"}, {"a", "cat"}}, {{"a", "dog"}, {"a", "dog"}}});
    REQUIRE(s.per_sample.size() == 2);
    CHECK(s.per_sample[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(s.per_sample[1] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(s.corpus == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("single-image corpus has zero idf everywhere") {
    CHECK(cider_d({{{"a", "cat"}, {"a", "cat"}}}).corpus == 0.0);
  }
  SUBCASE("disjoint candidate") {
    const auto s = cider_d({{{"x", "y"}, {"a", "cat"}}, {{"a", "dog"}, {"a", "dog"}}});
    CHECK(s.per_sample[0] == 0.0);
  }
  SUBCASE("clipping and length penalty") {
    // Unigrams: candidate {cat: 2 ln2}, reference {cat: ln2}; clipped cosine
    // ln2^2 / (2 ln2 * ln2) = 0.5. The reference has no bigrams. Lengths 2 vs 1.
    const auto s = cider_d({{{"cat", "cat"}, {"cat"}}, {{"dog"}, {"dog"}}});
    CHECK(s.per_sample[0] == doctest::Approx(10.0 * 0.5 * std::exp(-1.0 / 72.0) / 4.0).epsilon(1e-12));
    CHECK(s.per_sample[1] == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("range") {
    SplitMix64 rng(4);
    std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
    for (int i = 0; i < 30; ++i) pairs.emplace_back(random_seq(rng, 6, 8), random_seq(rng, 6, 8));
    for (double v : cider_d(pairs).per_sample) {
      CHECK(v >= 0.0);
      CHECK(v <= 10.0 + 1e-9);
    }
  }
  CHECK_THROWS_AS(cider_d({}), UsageError);
}

TEST_CASE("metrics are invariant under vocabulary renaming") {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::map<std::string, std::string> rename;
    std::vector<std::string> targets;
    for (int w = 0; w < 5; ++w) targets.push_back("v" + std::to_string(w * 7 + trial));
    shuffle(targets, rng);
    for (int w = 0; w < 5; ++w) rename["w" + std::to_string(w)] = targets[static_cast<std::size_t>(w)];
    auto apply = [&](TokenSeq s) {
      for (auto& t : s) t = rename.at(t);
      return s;
    };
    std::vector<TokenSeq> cands, refs, cands2, refs2;
    std::vector<std::pair<TokenSeq, TokenSeq>> pairs, pairs2;
    for (int i = 0; i < 4; ++i) {
      cands.push_back(random_seq(rng, 5, 7));
      refs.push_back(random_seq(rng, 5, 7));
      cands2.push_back(apply(cands.back()));
      refs2.push_back(apply(refs.back()));
      pairs.emplace_back(cands.back(), refs.back());
      pairs2.emplace_back(cands2.back(), refs2.back());
    }
    for (int n = 1; n <= 4; ++n) CHECK(bleu_corpus(cands, refs, n) == bleu_corpus(cands2, refs2, n));
    CHECK(rouge_l(cands[0], refs[0]) == rouge_l(cands2[0], refs2[0]));
    CHECK(cider_d(pairs).corpus == doctest::Approx(cider_d(pairs2).corpus).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_pairs") {
  const std::map<std::string, std::string> refs = {{"a", "A dog runs."}, {"b", "Two cats sleep"}};
  SystemRun copy{"copy", CoherenceLabel::Visible, refs};
  const auto b1 = evaluate_pairs(Metric::Bleu1, copy, refs);
  CHECK(b1.name == "bleu1");
  CHECK(b1.corpus == doctest::Approx(1.0));
  CHECK(b1.per_sample.size() == 2);

  SystemRun one{"one", CoherenceLabel::Meta, {{"a", "a dog walks"}}};
  const auto r = evaluate_pairs(Metric::RougeL, one, refs);
  REQUIRE(r.per_sample.size() == 1);
  CHECK(r.corpus == r.per_sample[0]);

  for (Metric m : all_metrics()) {
    CHECK(evaluate_pairs(m, copy, refs).per_sample.size() == copy.outputs.size());
    CHECK(parse_metric(metric_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_metric("meteor"), UsageError);

  SystemRun stray{"stray", CoherenceLabel::Meta, {{"zzz", "x"}}};
  CHECK_THROWS_AS(evaluate_pairs(Metric::Bleu1, stray, refs), Error);
}
