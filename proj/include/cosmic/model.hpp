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

#ifndef COSMIC_MODEL_HPP
#define COSMIC_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cosmic/corpus.hpp"
#include "cosmic/error.hpp"
#include "cosmic/rng.hpp"

// COSMic Vanilla scoring head.
//
//   e_I  = Linear1(image)                 (omitted when use_image is off)
//   e_g  = Linear2(gen_text)              Linear2 is shared by both captions
//   e_r  = Linear2(ref_text)
//   e_gc = Linear3(onehot(gen_label))     (both omitted when use_coherence is off)
//   e_rc = Linear3(onehot(ref_label))
//   e    = concat(e_I, e_g, e_r, e_gc, e_rc)
//   s    = Linear4(MLP(e)),  ReLU after every hidden layer, no output squashing
//
// Column-major batches: every input matrix holds one sample per column.
namespace cosmic {

struct ModelConfig {
  bool use_image = true;
  bool use_coherence = true;
  Eigen::Index image_dim = 2048;
  Eigen::Index text_dim = 1024;
  Eigen::Index embed_dim = 512;
  std::vector<Eigen::Index> hidden_sizes = {512, 256, 128, 64, 32, 16, 8};

  // Number of embed_dim-wide slots in the concatenation.
  Eigen::Index slot_count() const noexcept {
    return (use_image ? 1 : 0) + 2 + (use_coherence ? 2 : 0);
  }
  Eigen::Index concat_width() const noexcept { return slot_count() * embed_dim; }

  void validate() const {
    if (embed_dim <= 0 || text_dim <= 0 || (use_image && image_dim <= 0)) {
      throw UsageError("model dimensions must be positive");
    }
    if (hidden_sizes.empty()) throw UsageError("model needs at least one hidden layer");
    for (auto h : hidden_sizes) {
      if (h <= 0) throw UsageError("hidden layer sizes must be positive");
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
struct Affine {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weight;  // out x in
  Vector bias;    // out

  Affine() = default;
  Affine(Eigen::Index in, Eigen::Index out) : weight(Matrix::Zero(out, in)), bias(Vector::Zero(out)) {}

  Eigen::Index in() const noexcept { return weight.cols(); }
  Eigen::Index out() const noexcept { return weight.rows(); }
  Eigen::Index size() const noexcept { return weight.size() + bias.size(); }

  template <typename Derived>
  Matrix apply(const Eigen::MatrixBase<Derived>& x) const {
    return (weight * x).colwise() + bias;
  }

  void set_zero() {
    weight.setZero();
    bias.setZero();
  }
};

template <typename Scalar>
struct BasicParams {
  std::optional<Affine<Scalar>> image;      // Linear1
  Affine<Scalar> text;                      // Linear2
  std::optional<Affine<Scalar>> coherence;  // Linear3
  std::vector<Affine<Scalar>> mlp;          // MLP1
  Affine<Scalar> head;                      // Linear4
};

using ModelParams = BasicParams<double>;

// Visits corresponding layers of several parameter sets in canonical order,
// calling f(name, layer_0, layer_1, ...). Layer names are "linear1",
// "linear2", "linear3", "mlp.<i>", "linear4"; absent ablation layers are
// skipped. All sets must share one structure.
template <typename F, typename First, typename... Rest>
void zip_layers(F&& f, First& first, Rest&... rest) {
  if (first.image) f(std::string("linear1"), *first.image, *rest.image...);
  f(std::string("linear2"), first.text, rest.text...);
  if (first.coherence) f(std::string("linear3"), *first.coherence, *rest.coherence...);
  for (std::size_t i = 0; i < first.mlp.size(); ++i) {
    f("mlp." + std::to_string(i), first.mlp[i], rest.mlp[i]...);
  }
  f(std::string("linear4"), first.head, rest.head...);
}

// Sum of in*out + out over every affine map the config creates.
inline std::int64_t param_count(const ModelConfig& config) {
  config.validate();
  auto affine = [](std::int64_t in, std::int64_t out) { return in * out + out; };
  std::int64_t total = 0;
  if (config.use_image) total += affine(config.image_dim, config.embed_dim);
  total += affine(config.text_dim, config.embed_dim);
  if (config.use_coherence) total += affine(static_cast<std::int64_t>(kNumLabels), config.embed_dim);
  std::int64_t width = config.concat_width();
  for (auto h : config.hidden_sizes) {
    total += affine(width, h);
    width = h;
  }
  return total + affine(width, 1);
}

template <typename Scalar>
std::int64_t scalar_count(const BasicParams<Scalar>& params) {
  std::int64_t total = 0;
  zip_layers([&](const std::string&, const Affine<Scalar>& layer) { total += layer.size(); }, params);
  return total;
}

// All-zero parameters shaped by `config`.
template <typename Scalar = double>
BasicParams<Scalar> zero_params(const ModelConfig& config) {
  config.validate();
  BasicParams<Scalar> p;
  if (config.use_image) p.image.emplace(config.image_dim, config.embed_dim);
  p.text = Affine<Scalar>(config.text_dim, config.embed_dim);
  if (config.use_coherence) {
    p.coherence.emplace(static_cast<Eigen::Index>(kNumLabels), config.embed_dim);
  }
  Eigen::Index width = config.concat_width();
  for (auto h : config.hidden_sizes) {
    p.mlp.emplace_back(width, h);
    width = h;
  }
  p.head = Affine<Scalar>(width, 1);
  return p;
}

template <typename Scalar>
BasicParams<Scalar> zeros_like(const BasicParams<Scalar>& params) {
  BasicParams<Scalar> z = params;
  zip_layers([](const std::string&, Affine<Scalar>& layer) { layer.set_zero(); }, z);
  return z;
}

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero. Each layer
// draws row-major from its own SplitMix64 stream keyed by (seed, layer name),
// so a layer's initial values do not depend on which other layers exist.
template <typename Scalar = double>
BasicParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  BasicParams<Scalar> p = zero_params<Scalar>(config);
  zip_layers(
      [seed](const std::string& name, Affine<Scalar>& layer) {
        SplitMix64 rng(derive_seed(seed, fnv1a64(name)));
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
        for (Eigen::Index r = 0; r < layer.out(); ++r) {
          for (Eigen::Index c = 0; c < layer.in(); ++c) {
            layer.weight(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
          }
        }
      },
      p);
  return p;
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, 4, 1> embed_coherence(CoherenceLabel label) {
  Eigen::Matrix<Scalar, 4, 1> v = Eigen::Matrix<Scalar, 4, 1>::Zero();
  v[static_cast<Eigen::Index>(label_index(label))] = Scalar(1);
  return v;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 4, Eigen::Dynamic> one_hot_columns(const std::vector<CoherenceLabel>& labels) {
  Eigen::Matrix<Scalar, 4, Eigen::Dynamic> m =
      Eigen::Matrix<Scalar, 4, Eigen::Dynamic>::Zero(4, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    m(static_cast<Eigen::Index>(label_index(labels[j])), static_cast<Eigen::Index>(j)) = Scalar(1);
  }
  return m;
}

template <typename Scalar>
struct BasicSampleFeatures {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector image;  // may be empty when the image slot is disabled
  Vector gen;
  Vector ref;
  CoherenceLabel gen_label = CoherenceLabel::Visible;
  CoherenceLabel ref_label = CoherenceLabel::Visible;
};

using SampleFeatures = BasicSampleFeatures<double>;

template <typename Scalar>
struct BasicSampleBatch {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix image;  // image_dim x B, or 0 x B without the image slot
  Matrix gen;    // text_dim x B
  Matrix ref;    // text_dim x B
  std::vector<CoherenceLabel> gen_label;
  std::vector<CoherenceLabel> ref_label;

  Eigen::Index size() const noexcept { return gen.cols(); }

  static BasicSampleBatch single(const BasicSampleFeatures<Scalar>& f) {
    BasicSampleBatch b;
    b.image = f.image;
    b.gen = f.gen;
    b.ref = f.ref;
    b.gen_label = {f.gen_label};
    b.ref_label = {f.ref_label};
    return b;
  }
};

using SampleBatch = BasicSampleBatch<double>;

template <typename Scalar>
struct BasicBatchActivations {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix e_image, e_gen, e_ref, e_gen_label, e_ref_label;  // embed_dim x B (empty when disabled)
  Matrix concat;                                           // concat_width x B
  std::vector<Matrix> hidden;                              // post-ReLU, one per hidden layer
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> score;          // raw head output
};

using BatchActivations = BasicBatchActivations<double>;

template <typename Scalar>
void check_batch(const ModelConfig& config, const BasicSampleBatch<Scalar>& batch) {
  const Eigen::Index n = batch.size();
  auto fail = [](const std::string& what) { throw Error("feature shape mismatch: " + what); };
  if (batch.gen.rows() != config.text_dim || batch.ref.rows() != config.text_dim) {
    fail("caption vectors must have " + std::to_string(config.text_dim) + " entries");
  }
  if (batch.ref.cols() != n) fail("generated and reference batches differ in size");
  if (config.use_image &&
      (batch.image.rows() != config.image_dim || batch.image.cols() != n)) {
    fail("image vectors must have " + std::to_string(config.image_dim) + " entries");
  }
  if (static_cast<Eigen::Index>(batch.gen_label.size()) != n ||
      static_cast<Eigen::Index>(batch.ref_label.size()) != n) {
    fail("label count differs from batch size");
  }
}

template <typename Scalar>
BasicBatchActivations<Scalar> forward_batch(const BasicParams<Scalar>& params,
                                            const ModelConfig& config,
                                            const BasicSampleBatch<Scalar>& batch) {
  check_batch(config, batch);
  using Matrix = typename BasicBatchActivations<Scalar>::Matrix;
  const Eigen::Index n = batch.size();
  const Eigen::Index d = config.embed_dim;

  BasicBatchActivations<Scalar> act;
  act.concat.resize(config.concat_width(), n);
  Eigen::Index row = 0;
  auto place = [&](const Matrix& slot) {
    act.concat.middleRows(row, d) = slot;
    row += d;
  };
  if (config.use_image) {
    act.e_image = params.image->apply(batch.image);
    place(act.e_image);
  }
  act.e_gen = params.text.apply(batch.gen);
  act.e_ref = params.text.apply(batch.ref);
  place(act.e_gen);
  place(act.e_ref);
  if (config.use_coherence) {
    act.e_gen_label = params.coherence->apply(one_hot_columns<Scalar>(batch.gen_label));
    act.e_ref_label = params.coherence->apply(one_hot_columns<Scalar>(batch.ref_label));
    place(act.e_gen_label);
    place(act.e_ref_label);
  }

  const Matrix* input = &act.concat;
  act.hidden.reserve(params.mlp.size());
  for (const auto& layer : params.mlp) {
    act.hidden.push_back(layer.apply(*input).cwiseMax(Scalar(0)));
    input = &act.hidden.back();
  }
  act.score = params.head.apply(*input);
  return act;
}

template <typename Scalar>
struct BasicActivations {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector e_image, e_gen, e_ref, e_gen_label, e_ref_label;
  Vector concat;
  std::vector<Vector> hidden;
  Scalar score = Scalar(0);
};

using Activations = BasicActivations<double>;

template <typename Scalar>
BasicActivations<Scalar> forward(const BasicParams<Scalar>& params, const ModelConfig& config,
                                 const BasicSampleFeatures<Scalar>& feats) {
  const auto b = forward_batch(params, config, BasicSampleBatch<Scalar>::single(feats));
  BasicActivations<Scalar> a;
  if (b.e_image.size()) a.e_image = b.e_image.col(0);
  a.e_gen = b.e_gen.col(0);
  a.e_ref = b.e_ref.col(0);
  if (b.e_gen_label.size()) a.e_gen_label = b.e_gen_label.col(0);
  if (b.e_ref_label.size()) a.e_ref_label = b.e_ref_label.col(0);
  a.concat = b.concat.col(0);
  for (const auto& h : b.hidden) a.hidden.push_back(h.col(0));
  a.score = b.score(0);
  return a;
}

// Clamp applied when a score is shown to people; rankings use the raw value.
template <typename Scalar>
Scalar presented_score(Scalar raw) {
  return std::clamp(raw, Scalar(0), Scalar(1));
}

}  // namespace cosmic

#endif  // COSMIC_MODEL_HPP
