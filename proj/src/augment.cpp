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

#include "cosmic/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cosmic/error.hpp"
#include "cosmic/rng.hpp"

namespace cosmic {

std::size_t AugmentPlan::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& [label, k] : negatives) sum += k;
  return sum;
}

AugmentPlan plan_augmentation(const Dataset& ds, double tolerance, std::optional<double> target) {
  if (!(tolerance >= 0.0)) throw UsageError("augmentation tolerance must be non-negative");
  if (target && !(*target >= 0.0 && *target <= 1.0)) {
    throw UsageError("augmentation target must lie in [0, 1]");
  }

  const auto means = class_means(ds, CaptionSide::Generated);
  std::map<CoherenceLabel, std::size_t> sizes;
  for (const RatedSample& s : ds.samples) ++sizes[s.generated.label];

  AugmentPlan plan;
  plan.tolerance = tolerance;
  if (target) {
    plan.target_mean = *target;
  } else if (!means.empty()) {
    plan.target_mean = means.begin()->second;
    for (const auto& [label, m] : means) plan.target_mean = std::min(plan.target_mean, m);
  }

  for (const auto& [label, m] : means) {
    std::size_t k = 0;
    if (m > plan.target_mean + tolerance) {
      if (plan.target_mean <= 0.0) {
        throw Error("class " + std::string(to_string(label)) + " has mean " + std::to_string(m) +
                    ", which zero-scored negatives cannot bring down to a target of 0; raise the target");
      }
      const auto n = static_cast<double>(sizes[label]);
      // The small slack absorbs rounding in m so exact ratios do not round up.
      k = static_cast<std::size_t>(std::ceil(n * (m - plan.target_mean) / plan.target_mean - 1e-9));
      while (n * m / (n + static_cast<double>(k)) > plan.target_mean + tolerance) ++k;
    }
    plan.negatives[label] = k;
  }
  return plan;
}

Dataset augment(const Dataset& ds, const AugmentPlan& plan, std::uint64_t seed) {
  Dataset out = ds;
  if (plan.total() == 0) return out;

  std::map<std::string, std::set<std::string>, std::less<>> own_captions;
  for (const RatedSample& s : ds.samples) {
    own_captions[s.image_key].insert(s.generated.text);
    own_captions[s.image_key].insert(s.reference.text);
  }

  for (CoherenceLabel label : kAllLabels) {
    auto it = plan.negatives.find(label);
    if (it == plan.negatives.end() || it->second == 0) continue;
    const std::size_t wanted = it->second;
    const std::string name(to_string(label));

    std::vector<std::size_t> members;
    std::set<std::string> distinct;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.samples[i].generated.label == label) {
        members.push_back(i);
        distinct.insert(ds.samples[i].generated.text);
      }
    }
    if (members.empty()) throw Error("augmentation plan names class " + name + ", which has no samples");
    if (distinct.size() < 2) {
      throw Error("class " + name + " has a single distinct caption; cannot build mismatched negatives");
    }
    const std::vector<std::string> captions(distinct.begin(), distinct.end());

    SplitMix64 rng(derive_seed(seed, 0x6175676d656e7400ULL + label_index(label)));  // "augment"
    for (std::size_t made = 0; made < wanted; ++made) {
      const RatedSample* host = nullptr;
      const std::string* caption = nullptr;
      constexpr int kAttempts = 64;
      for (int attempt = 0; attempt < kAttempts && !caption; ++attempt) {
        const RatedSample& h = ds.samples[members[rng.below(members.size())]];
        const RatedSample& donor = ds.samples[members[rng.below(members.size())]];
        if (!own_captions[h.image_key].contains(donor.generated.text)) {
          host = &h;
          caption = &donor.generated.text;
        }
      }
      if (!caption) {
        // Exhaustive fallback from a random starting host.
        const std::size_t offset = rng.below(members.size());
        for (std::size_t step = 0; step < members.size() && !caption; ++step) {
          const RatedSample& h = ds.samples[members[(offset + step) % members.size()]];
          for (const std::string& c : captions) {
            if (!own_captions[h.image_key].contains(c)) {
              host = &h;
              caption = &c;
              break;
            }
          }
        }
      }
      if (!caption) {
        throw Error("class " + name + ": every caption is already paired with every image");
      }
      RatedSample neg;
      neg.image_key = host->image_key;
      neg.generated = CaptionRecord{*caption, label};
      neg.reference = host->reference;
      neg.rating = 1;
      neg.target = 0.0;
      neg.negative = true;
      neg.split = host->split;
      out.samples.push_back(std::move(neg));
    }
  }
  return out;
}

}  // namespace cosmic
