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

#include "cosmic/features.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "cosmic/binary_io.hpp"
#include "cosmic/error.hpp"
#include "cosmic/rng.hpp"

namespace cosmic {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'S', 'M', 'F'};

}  // namespace

FeatureStore::FeatureStore(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw Error("feature dimension must be positive");
}

bool FeatureStore::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

void FeatureStore::insert(std::string key, std::vector<float> vector) {
  if (key.empty()) throw Error("feature key must not be empty");
  if (key.size() > kMaxKeyBytes) throw Error("feature key longer than 65535 bytes");
  if (vector.size() != dim_) {
    throw Error("vector for \"" + key + "\" has " + std::to_string(vector.size()) +
                " entries, store dim is " + std::to_string(dim_));
  }
  for (float v : vector) {
    if (!std::isfinite(v)) throw Error("non-finite value in vector for \"" + key + "\"");
  }
  auto [it, inserted] = entries_.try_emplace(std::move(key), std::move(vector));
  if (!inserted) throw Error("duplicate feature key \"" + it->first + "\"");
}

std::span<const float> FeatureStore::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error("missing feature key \"" + std::string(key) + "\"");
  return it->second;
}

std::size_t write_store(const FeatureStore& store, std::ostream& out) {
  io::ByteWriter w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.le<std::uint32_t>(FeatureStore::kVersion);
  w.le<std::uint32_t>(store.dim());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(store.size()));
  for (const auto& [key, vec] : store.entries()) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(key.size()));
    w.bytes(key.data(), key.size());
    for (float v : vec) w.le<float>(v);
  }
  return w.count();
}

FeatureStore read_store(std::istream& in) {
  io::ByteReader r(in);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw Error("bad magic at offset 0");

  const std::size_t version_at = r.offset();
  const auto version = r.le<std::uint32_t>("version");
  if (version != FeatureStore::kVersion) {
    throw Error("unsupported version " + std::to_string(version) + " at offset " +
                std::to_string(version_at));
  }
  const std::size_t dim_at = r.offset();
  const auto dim = r.le<std::uint32_t>("dim");
  if (dim == 0) throw Error("zero dim at offset " + std::to_string(dim_at));
  const auto count = r.le<std::uint32_t>("count");

  FeatureStore store(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t record_at = r.offset();
    const auto key_len = r.le<std::uint16_t>("record key length");
    if (key_len == 0) throw Error("empty key at offset " + std::to_string(record_at));
    std::string key(key_len, '\0');
    r.bytes(key.data(), key_len, "record key");
    std::vector<float> vec(dim);
    for (auto& v : vec) v = r.le<float>("record payload");
    if (store.contains(key)) {
      throw Error("duplicate key \"" + key + "\" at offset " + std::to_string(record_at));
    }
    try {
      store.insert(std::move(key), std::move(vec));
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " at offset " + std::to_string(record_at));
    }
  }
  if (!r.at_eof()) throw Error("trailing bytes at offset " + std::to_string(r.offset()));
  return store;
}

void save_store(const FeatureStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_store(store, out);
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

FeatureStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_store(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

FeatureStore synth_store(const std::vector<std::string>& keys, std::uint32_t dim,
                         std::uint64_t seed) {
  FeatureStore store(dim);
  for (const std::string& key : keys) {
    if (store.contains(key)) throw Error("duplicate key \"" + key + "\" passed to synth_store");
    SplitMix64 rng(derive_seed(seed, fnv1a64(key)));
    std::vector<float> vec(dim);
    for (auto& v : vec) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    store.insert(key, std::move(vec));
  }
  return store;
}

Eigen::VectorXd get_vector(const FeatureStore& store, std::string_view key) {
  const auto v = store.get(key);
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::string caption_key(std::string_view text) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return std::string("txt:") + hex;
}

std::string image_key(std::string_view key) { return "img:" + std::string(key); }

const FeatureStore* FeatureBank::find_store(std::string_view key) const {
  for (const FeatureStore& s : stores_) {
    if (s.contains(key)) return &s;
  }
  return nullptr;
}

std::span<const float> FeatureBank::get(std::string_view key) const {
  if (const FeatureStore* s = find_store(key)) return s->get(key);
  throw Error("missing feature key \"" + std::string(key) + "\"");
}

FeatureBank load_bank(const std::vector<std::filesystem::path>& paths) {
  FeatureBank bank;
  for (const auto& p : paths) bank.add(load_store(p));
  return bank;
}

}  // namespace cosmic
