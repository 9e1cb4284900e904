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

#ifndef COSMIC_TRAIN_HPP
#define COSMIC_TRAIN_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cosmic/corpus.hpp"
#include "cosmic/features.hpp"
#include "cosmic/model.hpp"

namespace cosmic {

struct TrainConfig {
  int batch_size = 10;
  double base_lr = 1e-3;
  double decay_factor = 1e-2;  // multiplier applied at every decay boundary
  int decay_every = 10;        // epochs
  int max_epochs = 100;
  int patience = 3;            // epochs without validation improvement
  double val_tolerance = 1e-4;
  // Stop once the epoch-end training MSE falls below this value; 0 never fires.
  double target_train_loss = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// base_lr * decay_factor ^ floor(epoch / decay_every), epochs counted from 0.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

// Gradients share the parameter layout.
using Gradients = ModelParams;

// Reverse-mode gradient of the batch MSE, (1/B) sum_i (s_i - y_i)^2, with
// respect to every parameter, written over `grad` (which must share the
// parameter layout). ReLU'(0) is taken as 0. Returns the loss.
template <typename Scalar>
Scalar backward_batch_into(const BasicParams<Scalar>& params, const ModelConfig& config,
                           const BasicSampleBatch<Scalar>& batch,
                           const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& targets,
                           BasicParams<Scalar>& grad) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = batch.size();
  if (n == 0) throw UsageError("backward needs a non-empty batch");
  if (targets.size() != n) throw Error("target count differs from batch size");

  const auto act = forward_batch(params, config, batch);
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> residual = act.score - targets;
  const Scalar loss = residual.squaredNorm() / static_cast<Scalar>(n);

  zip_layers([](const std::string&, Affine<Scalar>& g) { g.set_zero(); }, grad);
  auto accumulate = [](Affine<Scalar>& g, const Matrix& delta, const Matrix& input) {
    g.weight.noalias() += delta * input.transpose();
    g.bias += delta.rowwise().sum();
  };

  Matrix delta = residual * (Scalar(2) / static_cast<Scalar>(n));
  const Matrix& last = act.hidden.empty() ? act.concat : act.hidden.back();
  accumulate(grad.head, delta, last);
  Matrix upstream = params.head.weight.transpose() * delta;

  for (std::size_t k = params.mlp.size(); k-- > 0;) {
    delta = upstream.cwiseProduct((act.hidden[k].array() > Scalar(0)).template cast<Scalar>().matrix());
    const Matrix& input = k == 0 ? act.concat : act.hidden[k - 1];
    accumulate(grad.mlp[k], delta, input);
    upstream = params.mlp[k].weight.transpose() * delta;
  }

  const Eigen::Index d = config.embed_dim;
  Eigen::Index row = 0;
  auto slot = [&]() -> Matrix {
    Matrix s = upstream.middleRows(row, d);
    row += d;
    return s;
  };
  if (config.use_image) accumulate(*grad.image, slot(), batch.image);
  accumulate(grad.text, slot(), batch.gen);
  accumulate(grad.text, slot(), batch.ref);
  if (config.use_coherence) {
    accumulate(*grad.coherence, slot(), one_hot_columns<Scalar>(batch.gen_label));
    accumulate(*grad.coherence, slot(), one_hot_columns<Scalar>(batch.ref_label));
  }
  return loss;
}

template <typename Scalar>
std::pair<Scalar, BasicParams<Scalar>> backward_batch(const BasicParams<Scalar>& params,
                                                      const ModelConfig& config,
                                                      const BasicSampleBatch<Scalar>& batch,
                                                      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& targets) {
  BasicParams<Scalar> grad = zeros_like(params);
  const Scalar loss = backward_batch_into(params, config, batch, targets, grad);
  return {loss, std::move(grad)};
}

Gradients backward(const ModelParams& params, const ModelConfig& config,
                   const std::vector<std::pair<SampleFeatures, double>>& batch);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::int64_t step = 0;
  ModelParams m;
  ModelParams v;

  static AdamState for_params(const ModelParams& params);
};

// One bias-corrected Adam update in place.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr);

// Features for every sample of `ds`, one column per sample in dataset order.
// Images resolve as image_key(...) and captions as caption_key(...).
SampleBatch assemble_batch(const Dataset& ds, const FeatureBank& bank, const ModelConfig& config);

Eigen::RowVectorXd targets_of(const Dataset& ds);

SampleBatch select_columns(const SampleBatch& batch, const std::vector<Eigen::Index>& columns);

// Raw scores, evaluated in chunks.
Eigen::RowVectorXd predict(const ModelParams& params, const ModelConfig& config,
                           const SampleBatch& batch);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  double initial_val_loss = 0.0;
  std::vector<EpochRecord> epochs;
  int stopped_epoch = 0;        // number of epochs run
  int best_epoch = -1;          // -1: the initial parameters were never beaten
  std::int64_t steps = 0;       // optimizer updates performed
  std::string stop_reason;      // "plateau", "target" or "max_epochs"

  // One {"epoch", "train_loss", "val_loss", "lr"} object per line.
  void write_jsonl(std::ostream& out) const;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  TrainHistory history;
};

// Epoch loop: a shuffle seeded by (seed, epoch), batches of batch_size with
// the final partial batch kept, one Adam update per batch at
// lr_at_epoch(epoch). Validation MSE is measured before training and after
// every epoch; training stops once it has failed to improve on the best value
// by more than val_tolerance for `patience` consecutive epochs, and the
// best-validation parameters are returned.
TrainResult train_batches(const SampleBatch& train_x, const Eigen::RowVectorXd& train_y,
                          const SampleBatch& val_x, const Eigen::RowVectorXd& val_y,
                          const ModelConfig& mconfig, const TrainConfig& tconfig);

TrainResult train(const Dataset& train_set, const Dataset& val_set, const FeatureBank& bank,
                  const ModelConfig& mconfig, const TrainConfig& tconfig);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t compared = 0;  // scalars compared
  std::size_t skipped = 0;   // scalars whose perturbation crossed a ReLU kink
  std::vector<std::string> layers;
};

// Small config used by the gradient checker: every width at most 8.
ModelConfig tiny_config(bool use_image = true, bool use_coherence = true);

// Compares backward_batch with central differences (step 1e-5) on random
// parameters, features and targets drawn from `seed`. Relative error is
// |a - n| / max(|a|, |n|, 1e-8).
GradientCheckResult gradient_check(const ModelConfig& config, std::uint64_t seed);

}  // namespace cosmic

#endif  // COSMIC_TRAIN_HPP
