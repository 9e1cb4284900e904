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

#ifndef COSMIC_TESTS_ORACLES_HPP
#define COSMIC_TESTS_ORACLES_HPP

// Reference computations used only by the tests. They deliberately take a
// different route from the library code they check.

#include <cstdint>
#include <vector>

namespace cosmic::oracle {

struct BruteKendall {
  std::int64_t concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
  std::int64_t pairs = 0;
};

// Enumerates every pair and classifies it by the signs of its differences.
inline BruteKendall kendall_by_enumeration(const std::vector<double>& x, const std::vector<double>& y) {
  BruteKendall k;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      ++k.pairs;
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0) ++k.tied_x;
      if (dy == 0) ++k.tied_y;
      if (dx != 0 && dy != 0) {
        if ((dx > 0) == (dy > 0)) {
          ++k.concordant;
        } else {
          ++k.discordant;
        }
      }
    }
  }
  return k;
}

// Layer-by-layer parameter tally written out from the architecture
// description: a list of (fan_in, fan_out) pairs.
struct LayerShape {
  std::int64_t in, out;
};

inline std::vector<LayerShape> vanilla_layers(bool image, bool coherence) {
  std::vector<LayerShape> layers;
  if (image) layers.push_back({2048, 512});
  layers.push_back({1024, 512});
  if (coherence) layers.push_back({4, 512});
  const std::int64_t concat = 512 * ((image ? 1 : 0) + 2 + (coherence ? 2 : 0));
  const std::int64_t hidden[] = {512, 256, 128, 64, 32, 16, 8};
  std::int64_t prev = concat;
  for (std::int64_t h : hidden) {
    layers.push_back({prev, h});
    prev = h;
  }
  layers.push_back({prev, 1});
  return layers;
}

inline std::int64_t tally(const std::vector<LayerShape>& layers) {
  std::int64_t total = 0;
  for (const auto& l : layers) total += l.in * l.out + l.out;
  return total;
}

}  // namespace cosmic::oracle

#endif  // COSMIC_TESTS_ORACLES_HPP
