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

#ifndef COSMIC_CHECKPOINT_HPP
#define COSMIC_CHECKPOINT_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>

#include "cosmic/model.hpp"

namespace cosmic {

// Model checkpoint (little-endian, no padding):
//
//   "CSMC" | version:u32 = 1 | config_len:u32 | config JSON (UTF-8)
//   | count:u32 | count x tensor
//   tensor = key_len:u16 | key | rows:u32 | cols:u32 | rows*cols x f64 (row-major)
//
// Tensor keys, in file order: "w:<layer>" then "b:<layer>" for each layer
// visited by zip_layers ("linear1", "linear2", "linear3", "mlp.0" ..,
// "linear4"). Biases are stored as rows x 1. Values are kept at full double
// precision so a reloaded model scores bit-identically.
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

std::size_t write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

}  // namespace cosmic

#endif  // COSMIC_CHECKPOINT_HPP
