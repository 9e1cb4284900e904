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

#include "cosmic/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "cosmic/error.hpp"
#include "cosmic/rng.hpp"

namespace cosmic {

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch size must be positive");
  if (!(base_lr > 0.0) || !(decay_factor > 0.0)) throw UsageError("learning rates must be positive");
  if (decay_every < 1) throw UsageError("decay interval must be positive");
  if (max_epochs < 1) throw UsageError("max epochs must be positive");
  if (patience < 1) throw UsageError("patience must be at least 1");
  if (!(val_tolerance > 0.0)) throw UsageError("validation tolerance must be positive");
  if (!(target_train_loss >= 0.0) || !std::isfinite(target_train_loss)) {
    throw UsageError("target training loss must be a finite non-negative number");
  }
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw UsageError("epoch must be non-negative");
  return cfg.base_lr * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw UsageError("mse_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (predictions.empty()) throw UsageError("mse_loss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

Gradients backward(const ModelParams& params, const ModelConfig& config,
                   const std::vector<std::pair<SampleFeatures, double>>& batch) {
  if (batch.empty()) throw UsageError("backward needs a non-empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  SampleBatch x;
  x.image.resize(config.use_image ? config.image_dim : 0, n);
  x.gen.resize(config.text_dim, n);
  x.ref.resize(config.text_dim, n);
  Eigen::RowVectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& [f, target] = batch[static_cast<std::size_t>(j)];
    if (config.use_image) {
      if (f.image.size() != config.image_dim) throw Error("feature shape mismatch: image vector");
      x.image.col(j) = f.image;
    }
    if (f.gen.size() != config.text_dim || f.ref.size() != config.text_dim) {
      throw Error("feature shape mismatch: caption vector");
    }
    x.gen.col(j) = f.gen;
    x.ref.col(j) = f.ref;
    x.gen_label.push_back(f.gen_label);
    x.ref_label.push_back(f.ref_label);
    y[j] = target;
  }
  return backward_batch(params, config, x, y).second;
}

AdamState AdamState::for_params(const ModelParams& params) {
  return AdamState{0, zeros_like(params), zeros_like(params)};
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
  // One fused pass per tensor; the update is memory bound on large layers.
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    double* tp = theta.data();
    const double* gp = g.data();
    double* mp = m.data();
    double* vp = v.data();
    const Eigen::Index n = theta.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double gi = gp[i];
      const double mi = AdamState::kBeta1 * mp[i] + (1.0 - AdamState::kBeta1) * gi;
      const double vi = AdamState::kBeta2 * vp[i] + (1.0 - AdamState::kBeta2) * (gi * gi);
      mp[i] = mi;
      vp[i] = vi;
      tp[i] -= lr * (mi / c1) / (std::sqrt(vi / c2) + AdamState::kEpsilon);
    }
  };
  zip_layers(
      [&](const std::string&, Affine<double>& p, const Affine<double>& g, Affine<double>& m,
          Affine<double>& v) {
        update(p.weight, g.weight, m.weight, v.weight);
        update(p.bias, g.bias, m.bias, v.bias);
      },
      params, grads, state.m, state.v);
}

namespace {

void copy_column(Eigen::MatrixXd& dst, Eigen::Index col, std::span<const float> src,
                 Eigen::Index expected, const std::string& key) {
  if (static_cast<Eigen::Index>(src.size()) != expected) {
    throw Error("feature \"" + key + "\" has " + std::to_string(src.size()) +
                " entries, model expects " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < src.size(); ++i) dst(static_cast<Eigen::Index>(i), col) = src[i];
}

}  // namespace

SampleBatch assemble_batch(const Dataset& ds, const FeatureBank& bank, const ModelConfig& config) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  SampleBatch b;
  b.image.resize(config.use_image ? config.image_dim : 0, n);
  b.gen.resize(config.text_dim, n);
  b.ref.resize(config.text_dim, n);
  b.gen_label.reserve(ds.size());
  b.ref_label.reserve(ds.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const RatedSample& s = ds.samples[static_cast<std::size_t>(j)];
    if (config.use_image) {
      const std::string key = image_key(s.image_key);
      copy_column(b.image, j, bank.get(key), config.image_dim, key);
    }
    const std::string gk = caption_key(s.generated.text);
    copy_column(b.gen, j, bank.get(gk), config.text_dim, gk);
    const std::string rk = caption_key(s.reference.text);
    copy_column(b.ref, j, bank.get(rk), config.text_dim, rk);
    b.gen_label.push_back(s.generated.label);
    b.ref_label.push_back(s.reference.label);
  }
  return b;
}

Eigen::RowVectorXd targets_of(const Dataset& ds) {
  Eigen::RowVectorXd y(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) y[static_cast<Eigen::Index>(i)] = ds.samples[i].target;
  return y;
}

SampleBatch select_columns(const SampleBatch& batch, const std::vector<Eigen::Index>& columns) {
  SampleBatch out;
  out.image = batch.image(Eigen::all, columns);
  out.gen = batch.gen(Eigen::all, columns);
  out.ref = batch.ref(Eigen::all, columns);
  for (auto c : columns) {
    out.gen_label.push_back(batch.gen_label[static_cast<std::size_t>(c)]);
    out.ref_label.push_back(batch.ref_label[static_cast<std::size_t>(c)]);
  }
  return out;
}

Eigen::RowVectorXd predict(const ModelParams& params, const ModelConfig& config,
                           const SampleBatch& batch) {
  constexpr Eigen::Index kChunk = 1024;
  const Eigen::Index n = batch.size();
  Eigen::RowVectorXd out(n);
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(len));
    for (Eigen::Index i = 0; i < len; ++i) cols[static_cast<std::size_t>(i)] = start + i;
    out.segment(start, len) = forward_batch(params, config, select_columns(batch, cols)).score;
  }
  return out;
}

void TrainHistory::write_jsonl(std::ostream& out) const {
  for (const EpochRecord& e : epochs) {
    nlohmann::ordered_json line;
    line["epoch"] = e.epoch;
    line["train_loss"] = e.train_loss;
    line["val_loss"] = e.val_loss;
    line["lr"] = e.lr;
    out << line.dump() << '\n';
  }
}

namespace {

double dataset_loss(const ModelParams& params, const ModelConfig& config, const SampleBatch& x,
                    const Eigen::RowVectorXd& y) {
  const Eigen::RowVectorXd pred = predict(params, config, x);
  return mse_loss(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                  std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

}  // namespace

TrainResult train_batches(const SampleBatch& train_x, const Eigen::RowVectorXd& train_y,
                          const SampleBatch& val_x, const Eigen::RowVectorXd& val_y,
                          const ModelConfig& mconfig, const TrainConfig& tconfig) {
  mconfig.validate();
  tconfig.validate();
  if (train_x.size() == 0 || val_x.size() == 0) throw Error("training and validation sets must be non-empty");
  if (train_y.size() != train_x.size() || val_y.size() != val_x.size()) {
    throw Error("target count differs from sample count");
  }

  ModelParams params = init_params(mconfig, tconfig.seed);
  AdamState adam = AdamState::for_params(params);
  Gradients grads = zeros_like(params);

  TrainResult result;
  TrainHistory& hist = result.history;
  hist.initial_val_loss = dataset_loss(params, mconfig, val_x, val_y);
  double best_val = hist.initial_val_loss;
  result.params = params;
  int stale = 0;

  const Eigen::Index n = train_x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  hist.stop_reason = "max_epochs";
  for (int epoch = 0; epoch < tconfig.max_epochs; ++epoch) {
    const double lr = lr_at_epoch(tconfig, epoch);
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    SplitMix64 rng(derive_seed(tconfig.seed, 0x65706f6368000000ULL + static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);

    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tconfig.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tconfig.batch_size));
      const std::vector<Eigen::Index> cols(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::RowVectorXd y = train_y(Eigen::all, cols);
      const double loss = backward_batch_into(params, mconfig, select_columns(train_x, cols), y, grads);
      if (!std::isfinite(loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(batch_index));
      }
      adam_step(params, grads, adam, lr);
      ++hist.steps;
      ++batch_index;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = dataset_loss(params, mconfig, train_x, train_y);
    rec.val_loss = dataset_loss(params, mconfig, val_x, val_y);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw Error("non-finite loss after epoch " + std::to_string(epoch));
    }
    hist.epochs.push_back(rec);
    hist.stopped_epoch = epoch + 1;

    if (rec.val_loss < best_val - tconfig.val_tolerance) {
      stale = 0;
    } else {
      ++stale;
    }
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.params = params;
      hist.best_epoch = epoch;
    }
    if (rec.train_loss < tconfig.target_train_loss) {
      hist.stop_reason = "target";
      break;
    }
    if (stale >= tconfig.patience) {
      hist.stop_reason = "plateau";
      break;
    }
  }
  return result;
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, const FeatureBank& bank,
                  const ModelConfig& mconfig, const TrainConfig& tconfig) {
  if (train_set.empty() || val_set.empty()) throw Error("training and validation sets must be non-empty");
  mconfig.validate();
  return train_batches(assemble_batch(train_set, bank, mconfig), targets_of(train_set),
                       assemble_batch(val_set, bank, mconfig), targets_of(val_set), mconfig, tconfig);
}

ModelConfig tiny_config(bool use_image, bool use_coherence) {
  ModelConfig c;
  c.use_image = use_image;
  c.use_coherence = use_coherence;
  c.image_dim = 6;
  c.text_dim = 5;
  c.embed_dim = 4;
  c.hidden_sizes = {8, 4, 2};
  return c;
}

namespace {

// Per-layer ReLU on/off pattern, used to detect kink crossings.
std::vector<Eigen::ArrayXXd> relu_masks(const BatchActivations& act) {
  std::vector<Eigen::ArrayXXd> masks;
  for (const auto& h : act.hidden) masks.push_back((h.array() > 0.0).cast<double>());
  return masks;
}

bool same_masks(const std::vector<Eigen::ArrayXXd>& a, const std::vector<Eigen::ArrayXXd>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] != b[i]).any()) return false;
  }
  return true;
}

}  // namespace

GradientCheckResult gradient_check(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  constexpr double kStep = 1e-5;
  constexpr Eigen::Index kBatch = 4;

  ModelParams params = init_params(config, seed);
  SplitMix64 rng(derive_seed(seed, 0x6772616463686bULL));  // "gradchk"
  zip_layers(
      [&](const std::string&, Affine<double>& layer) {
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.5, 0.5);
      },
      params);

  SampleBatch batch;
  auto fill = [&](Eigen::MatrixXd& m, Eigen::Index rows) {
    m.resize(rows, kBatch);
    for (Eigen::Index c = 0; c < kBatch; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
    }
  };
  fill(batch.image, config.use_image ? config.image_dim : 0);
  fill(batch.gen, config.text_dim);
  fill(batch.ref, config.text_dim);
  for (Eigen::Index j = 0; j < kBatch; ++j) {
    batch.gen_label.push_back(kAllLabels[rng.below(kNumLabels)]);
    batch.ref_label.push_back(kAllLabels[rng.below(kNumLabels)]);
  }
  Eigen::RowVectorXd targets(kBatch);
  for (Eigen::Index j = 0; j < kBatch; ++j) targets[j] = rng.uniform01();

  const Gradients analytic = backward_batch(params, config, batch, targets).second;
  const auto base_masks = relu_masks(forward_batch(params, config, batch));

  auto loss_at = [&](std::vector<Eigen::ArrayXXd>* masks) {
    const auto act = forward_batch(params, config, batch);
    if (masks) *masks = relu_masks(act);
    return (act.score - targets).squaredNorm() / static_cast<double>(kBatch);
  };

  GradientCheckResult result;
  auto probe = [&](double& theta, double grad) {
    const double saved = theta;
    std::vector<Eigen::ArrayXXd> plus_masks, minus_masks;
    theta = saved + kStep;
    const double plus = loss_at(&plus_masks);
    theta = saved - kStep;
    const double minus = loss_at(&minus_masks);
    theta = saved;
    if (!same_masks(base_masks, plus_masks) || !same_masks(base_masks, minus_masks)) {
      ++result.skipped;
      return;
    }
    const double numeric = (plus - minus) / (2.0 * kStep);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(grad - numeric) / denom);
    ++result.compared;
  };

  zip_layers(
      [&](const std::string& name, Affine<double>& layer, const Affine<double>& g) {
        result.layers.push_back(name);
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) probe(layer.weight.data()[i], g.weight.data()[i]);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias[i], g.bias[i]);
      },
      params, analytic);
  return result;
}

}  // namespace cosmic
