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

#include <set>

#include "cosmic/augment.hpp"
#include "cosmic/error.hpp"
#include "fixtures.hpp"

using namespace cosmic;

namespace {

// n samples of one class whose mean target is `mean` (mean * 4 * n must be an
// integer number of rating steps).
void add_class(Dataset& ds, CoherenceLabel label, std::size_t n, double mean) {
  auto steps = static_cast<long>(std::llround(mean * 4.0 * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const long s = std::min<long>(4, steps);
    steps -= s;
    const std::string id = std::string(to_string(label)) + std::to_string(i);
    ds.samples.push_back(testing::make_sample("img-" + id, "caption " + id, label, "ref " + id,
                                              CoherenceLabel::Visible, static_cast<int>(s) + 1));
  }
}

}  // namespace

TEST_CASE("plan_augmentation") {
  SUBCASE("closed-form count") {
    Dataset ds;
    add_class(ds, CoherenceLabel::Visible, 10, 0.6);
    add_class(ds, CoherenceLabel::Meta, 10, 0.3);
    const AugmentPlan plan = plan_augmentation(ds, 0.0);
    CHECK(plan.target_mean == doctest::Approx(0.3));
    CHECK(plan.negatives.at(CoherenceLabel::Visible) == 10);
    CHECK(plan.negatives.at(CoherenceLabel::Meta) == 0);
    CHECK(plan.total() == 10);
  }
  SUBCASE("explicit target") {
    Dataset ds;
    add_class(ds, CoherenceLabel::Visible, 10, 0.6);
    CHECK(plan_augmentation(ds, 0.0, 0.3).negatives.at(CoherenceLabel::Visible) == 10);
    CHECK(plan_augmentation(ds, 0.0, 0.6).negatives.at(CoherenceLabel::Visible) == 0);
    CHECK(plan_augmentation(ds, 0.31, 0.3).negatives.at(CoherenceLabel::Visible) == 0);
  }
  SUBCASE("equal means need nothing") {
    Dataset ds;
    for (auto l : kAllLabels) add_class(ds, l, 4, 0.5);
    CHECK(plan_augmentation(ds, 0.0).total() == 0);
  }
  SUBCASE("unreachable zero target") {
    Dataset ds;
    add_class(ds, CoherenceLabel::Visible, 4, 0.5);
    add_class(ds, CoherenceLabel::Story, 4, 0.0);
    CHECK_THROWS_WITH_AS(plan_augmentation(ds, 0.01), doctest::Contains("raise the target"), Error);
    CHECK_THROWS_AS(plan_augmentation(ds, -1.0), UsageError);
  }
  SUBCASE("every resulting mean is within tolerance") {
    Dataset ds;
    add_class(ds, CoherenceLabel::Visible, 13, 0.75);
    add_class(ds, CoherenceLabel::Meta, 7, 0.5);
    add_class(ds, CoherenceLabel::Subjective, 9, 0.25);
    add_class(ds, CoherenceLabel::Story, 5, 0.4);
    for (double tol : {0.0, 0.01, 0.05}) {
      const AugmentPlan plan = plan_augmentation(ds, tol);
      const auto means = class_means(augment(ds, plan, 1));
      for (const auto& [label, m] : means) CHECK(m <= plan.target_mean + tol + 1e-12);
    }
  }
}

TEST_CASE("augment") {
  Dataset ds;
  add_class(ds, CoherenceLabel::Visible, 10, 0.6);
  add_class(ds, CoherenceLabel::Meta, 10, 0.3);
  const AugmentPlan plan = plan_augmentation(ds, 0.0);

  SUBCASE("empty plan is the identity") {
    AugmentPlan none = plan;
    for (auto& [l, k] : none.negatives) k = 0;
    CHECK(augment(ds, none, 1) == ds);
  }
  SUBCASE("bookkeeping and negatives") {
    const Dataset out = augment(ds, plan, 1);
    REQUIRE(out.size() == 30);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(out.samples[i] == ds.samples[i]);
    std::size_t visible = 0, zero = 0;
    std::map<std::string, std::set<std::string>> own;
    for (const auto& s : ds.samples) {
      own[s.image_key].insert(s.generated.text);
      own[s.image_key].insert(s.reference.text);
    }
    for (std::size_t i = ds.size(); i < out.size(); ++i) {
      const RatedSample& s = out.samples[i];
      CHECK(s.negative);
      CHECK(s.target == 0.0);
      CHECK(s.rating == 1);
      CHECK(s.generated.label == CoherenceLabel::Visible);
      REQUIRE(own.count(s.image_key) == 1);
      CHECK(own[s.image_key].count(s.generated.text) == 0);
    }
    for (const auto& s : out.samples) {
      if (s.generated.label == CoherenceLabel::Visible) {
        ++visible;
        zero += s.target == 0.0;
      }
    }
    CHECK(visible == 20);
    CHECK(zero >= 10);
    CHECK(class_means(out).at(CoherenceLabel::Visible) == doctest::Approx(0.3));
  }
  SUBCASE("deterministic per seed") {
    CHECK(augment(ds, plan, 4) == augment(ds, plan, 4));
    bool differs = false;
    for (std::uint64_t s = 5; s < 10; ++s) differs |= !(augment(ds, plan, s) == augment(ds, plan, 4));
    CHECK(differs);
  }
  SUBCASE("mean gap never grows") {
    auto gap = [](const Dataset& d) {
      const auto m = class_means(d);
      double lo = 1, hi = 0;
      for (const auto& [l, v] : m) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return hi - lo;
    };
    CHECK(gap(augment(ds, plan, 1)) <= gap(ds));
  }
  SUBCASE("single distinct caption cannot be mismatched") {
    Dataset mono;
    for (int i = 0; i < 3; ++i) {
      mono.samples.push_back(testing::make_sample("img" + std::to_string(i), "same words", CoherenceLabel::Story,
                                                  "ref", CoherenceLabel::Visible, 5));
    }
    add_class(mono, CoherenceLabel::Meta, 4, 0.25);
    const AugmentPlan p = plan_augmentation(mono, 0.0);
    CHECK_THROWS_WITH_AS(augment(mono, p, 1), doctest::Contains("Story"), Error);
  }
}
