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

#include "cosmic/checkpoint.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cosmic/binary_io.hpp"
#include "cosmic/error.hpp"

namespace cosmic {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'S', 'M', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_tensor(io::ByteWriter& w, const std::string& key, const Eigen::MatrixXd& m) {
  w.le<std::uint16_t>(static_cast<std::uint16_t>(key.size()));
  w.bytes(key.data(), key.size());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.le<double>(m(r, c));
  }
}

}  // namespace

std::string config_to_json(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["use_image"] = config.use_image;
  j["use_coherence"] = config.use_coherence;
  j["image_dim"] = config.image_dim;
  j["text_dim"] = config.text_dim;
  j["embed_dim"] = config.embed_dim;
  j["hidden_sizes"] = config.hidden_sizes;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.use_image = j.at("use_image").get<bool>();
    c.use_coherence = j.at("use_coherence").get<bool>();
    c.image_dim = j.at("image_dim").get<Eigen::Index>();
    c.text_dim = j.at("text_dim").get<Eigen::Index>();
    c.embed_dim = j.at("embed_dim").get<Eigen::Index>();
    c.hidden_sizes = j.at("hidden_sizes").get<std::vector<Eigen::Index>>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad model config: ") + e.what());
  }
}

std::size_t write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  io::ByteWriter w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.le<std::uint32_t>(kVersion);
  const std::string cfg = config_to_json(ckpt.config);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg.data(), cfg.size());

  std::uint32_t count = 0;
  zip_layers([&](const std::string&, const Affine<double>&) { count += 2; }, ckpt.params);
  w.le<std::uint32_t>(count);
  zip_layers(
      [&](const std::string& name, const Affine<double>& layer) {
        write_tensor(w, "w:" + name, layer.weight);
        write_tensor(w, "b:" + name, layer.bias);
      },
      ckpt.params);
  return w.count();
}

Checkpoint read_checkpoint(std::istream& in) {
  io::ByteReader r(in);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw Error("bad checkpoint magic at offset 0");
  const auto version = r.le<std::uint32_t>("version");
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto cfg_len = r.le<std::uint32_t>("config length");
  std::string cfg(cfg_len, '\0');
  r.bytes(cfg.data(), cfg_len, "config");

  Checkpoint ckpt;
  ckpt.config = config_from_json(cfg);
  ckpt.params = zero_params(ckpt.config);

  std::uint32_t expected = 0;
  zip_layers([&](const std::string&, const Affine<double>&) { expected += 2; }, ckpt.params);
  const std::size_t count_at = r.offset();
  const auto count = r.le<std::uint32_t>("tensor count");
  if (count != expected) {
    throw Error("checkpoint holds " + std::to_string(count) + " tensors, config needs " +
                std::to_string(expected) + " (offset " + std::to_string(count_at) + ")");
  }

  auto read_tensor = [&](const std::string& want, auto& dst) {
    const std::size_t at = r.offset();
    const auto key_len = r.le<std::uint16_t>("tensor key length");
    std::string key(key_len, '\0');
    r.bytes(key.data(), key_len, "tensor key");
    if (key != want) throw Error("expected tensor \"" + want + "\", found \"" + key + "\" at offset " + std::to_string(at));
    const auto rows = r.le<std::uint32_t>("tensor rows");
    const auto cols = r.le<std::uint32_t>("tensor cols");
    if (rows != dst.rows() || cols != dst.cols()) {
      throw Error("tensor \"" + key + "\" has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                  ", config needs " + std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
    }
    for (Eigen::Index i = 0; i < dst.rows(); ++i) {
      for (Eigen::Index j = 0; j < dst.cols(); ++j) {
        const double v = r.le<double>("tensor payload");
        if (!std::isfinite(v)) throw Error("non-finite value in tensor \"" + key + "\"");
        dst(i, j) = v;
      }
    }
  };
  zip_layers(
      [&](const std::string& name, Affine<double>& layer) {
        read_tensor("w:" + name, layer.weight);
        read_tensor("b:" + name, layer.bias);
      },
      ckpt.params);
  if (!r.at_eof()) throw Error("trailing bytes at offset " + std::to_string(r.offset()));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(ckpt, out);
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace cosmic
