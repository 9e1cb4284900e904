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

#ifndef COSMIC_AUGMENT_HPP
#define COSMIC_AUGMENT_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>

#include "cosmic/corpus.hpp"

namespace cosmic {

// How many zero-target negatives to append per coherence class (classes are
// keyed by the generated caption's label).
struct AugmentPlan {
  double target_mean = 0.0;
  double tolerance = 0.0;
  std::map<CoherenceLabel, std::size_t> negatives;

  std::size_t total() const noexcept;
};

// For a class of n samples with mean m > target + tolerance the plan adds
// k = ceil(n (m - target) / target) negatives, which brings the class mean to
// n m / (n + k) <= target. Other classes get 0. The target defaults to the
// smallest class mean. A zero target is only accepted when no class needs
// lowering.
AugmentPlan plan_augmentation(const Dataset& ds, double tolerance,
                              std::optional<double> target = std::nullopt);

// Appends the planned negatives after the original samples. A negative takes
// the image and reference of a random sample of its class, and the generated
// caption of another sample of that class whose text differs from every
// caption originally paired with the image. Rating 1, target 0, negative set.
Dataset augment(const Dataset& ds, const AugmentPlan& plan, std::uint64_t seed);

}  // namespace cosmic

#endif  // COSMIC_AUGMENT_HPP
