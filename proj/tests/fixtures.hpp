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

#ifndef COSMIC_TESTS_FIXTURES_HPP
#define COSMIC_TESTS_FIXTURES_HPP

#include <set>
#include <string>
#include <vector>

#include "cosmic/corpus.hpp"
#include "cosmic/features.hpp"
#include "cosmic/model.hpp"
#include "cosmic/rng.hpp"

namespace cosmic::testing {

inline RatedSample make_sample(std::string image, std::string gen, CoherenceLabel gen_label,
                               std::string ref, CoherenceLabel ref_label, int rating) {
  RatedSample s;
  s.image_key = std::move(image);
  s.generated = {std::move(gen), gen_label};
  s.reference = {std::move(ref), ref_label};
  s.rating = rating;
  s.target = normalize_rating(rating);
  return s;
}

// n samples with distinct images and captions, labels cycling through the
// four classes, ratings drawn uniformly from 1..5.
inline Dataset synthetic_dataset(std::size_t n, std::uint64_t seed) {
  Dataset ds;
  ds.name = "synthetic";
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = kAllLabels[i % kNumLabels];
    ds.samples.push_back(make_sample("im" + std::to_string(i), "generated caption " + std::to_string(i), label,
                                     "reference caption " + std::to_string(i), CoherenceLabel::Visible,
                                     static_cast<int>(rng.below(5)) + 1));
  }
  return ds;
}

// Image and text stores covering every key the dataset needs.
inline FeatureBank synthetic_bank(const Dataset& ds, std::uint32_t image_dim, std::uint32_t text_dim,
                                  std::uint64_t seed) {
  std::set<std::string> images, texts;
  for (const RatedSample& s : ds.samples) {
    images.insert(image_key(s.image_key));
    texts.insert(caption_key(s.generated.text));
    texts.insert(caption_key(s.reference.text));
  }
  FeatureBank bank;
  bank.add(synth_store({images.begin(), images.end()}, image_dim, seed));
  bank.add(synth_store({texts.begin(), texts.end()}, text_dim, seed + 1));
  return bank;
}

inline ModelConfig small_config(bool use_image = true, bool use_coherence = true) {
  ModelConfig c;
  c.use_image = use_image;
  c.use_coherence = use_coherence;
  c.image_dim = 16;
  c.text_dim = 12;
  c.embed_dim = 8;
  c.hidden_sizes = {16, 8, 4};
  return c;
}

}  // namespace cosmic::testing

#endif  // COSMIC_TESTS_FIXTURES_HPP
