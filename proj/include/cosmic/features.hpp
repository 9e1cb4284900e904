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

#ifndef COSMIC_FEATURES_HPP
#define COSMIC_FEATURES_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cosmic {

// Keyed collection of fixed-width float vectors.
//
// On-disk layout (little-endian, no padding):
//
//   "CSMF" | version:u32 = 1 | dim:u32 | count:u32 | count x record
//   record = key_len:u16 | key bytes (UTF-8) | dim x f32
//
// Records are written in ascending byte order of their keys, so equal stores
// serialize to identical bytes.
class FeatureStore {
 public:
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kHeaderBytes = 16;
  static constexpr std::size_t kMaxKeyBytes = 65535;

  explicit FeatureStore(std::uint32_t dim);

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool contains(std::string_view key) const;

  // Throws on a duplicate or malformed key, wrong length, or non-finite value.
  void insert(std::string key, std::vector<float> vector);

  // Throws Error naming the key when it is absent.
  std::span<const float> get(std::string_view key) const;

  const std::map<std::string, std::vector<float>, std::less<>>& entries() const noexcept {
    return entries_;
  }

  bool operator==(const FeatureStore&) const = default;

 private:
  std::uint32_t dim_;
  std::map<std::string, std::vector<float>, std::less<>> entries_;
};

// Returns the number of bytes written.
std::size_t write_store(const FeatureStore& store, std::ostream& out);

// Errors report the byte offset where decoding failed.
FeatureStore read_store(std::istream& in);

void save_store(const FeatureStore& store, const std::filesystem::path& path);
FeatureStore load_store(const std::filesystem::path& path);

// Each vector depends on (key, dim, seed) only: a SplitMix64 stream seeded
// with derive_seed(seed, fnv1a64(key)) yields dim values uniform in [-1, 1).
FeatureStore synth_store(const std::vector<std::string>& keys, std::uint32_t dim,
                         std::uint64_t seed);

// Upcast copy of a stored vector.
Eigen::VectorXd get_vector(const FeatureStore& store, std::string_view key);

// "txt:" + 16 lowercase hex digits of fnv1a64(text).
std::string caption_key(std::string_view text);
// "img:" + image_key.
std::string image_key(std::string_view key);

// Several stores searched in order, e.g. one image store and one text store.
class FeatureBank {
 public:
  FeatureBank() = default;
  explicit FeatureBank(std::vector<FeatureStore> stores) : stores_(std::move(stores)) {}

  void add(FeatureStore store) { stores_.push_back(std::move(store)); }

  // Throws Error naming the key when no store holds it.
  std::span<const float> get(std::string_view key) const;
  const FeatureStore* find_store(std::string_view key) const;

  const std::vector<FeatureStore>& stores() const noexcept { return stores_; }

 private:
  std::vector<FeatureStore> stores_;
};

FeatureBank load_bank(const std::vector<std::filesystem::path>& paths);

}  // namespace cosmic

#endif  // COSMIC_FEATURES_HPP
