#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "signdet/checkpoint.hpp"
#include "signdet/error.hpp"
#include "signdet/multibox.hpp"
#include "signdet/random.hpp"
#include "signdet/tinynet.hpp"
#include "signdet/training_log.hpp"

namespace signdet {

struct TrainConfig {
  std::uint64_t steps = 10000;
  std::size_t batch_size = 8;
  double base_lr = 0.08;
  /// Rate at step 0 of the warmup; base_lr / 10 when unset.
  std::optional<double> warmup_start_lr;
  std::uint64_t warmup_steps = 1000;
  /// Step at which the cosine reaches zero; must be >= steps.
  std::uint64_t horizon = 50000;
  double momentum = 0.9;
  /// Global gradient-norm clip; 0 disables it.
  double clip_grad_norm = 0.0;
  std::uint64_t checkpoint_interval = 1000;
  std::uint64_t log_interval = 100;
  std::uint64_t seed = 1;
  double iou_threshold = 0.5;
  double neg_pos_ratio = 3.0;
  /// Chance that a batch slot uses the mirrored image; 0 disables it.
  double flip_probability = 0.0;

  double warmup_start() const { return warmup_start_lr.value_or(base_lr / 10.0); }

  void validate() const {
    if (steps == 0) fail(ErrorKind::InvalidSpec, "steps must be > 0");
    if (batch_size == 0) fail(ErrorKind::InvalidSpec, "batch_size must be > 0");
    if (!(base_lr > 0.0) || !(warmup_start() > 0.0)) fail(ErrorKind::InvalidSpec, "learning rates must be > 0");
    if (horizon < steps) fail(ErrorKind::InvalidSpec, "schedule horizon must be >= steps");
    if (warmup_steps >= horizon) fail(ErrorKind::InvalidSpec, "warmup must end before the horizon");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::InvalidSpec, "momentum must lie in [0,1)");
    if (log_interval == 0 || checkpoint_interval == 0) fail(ErrorKind::InvalidSpec, "intervals must be > 0");
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) fail(ErrorKind::InvalidSpec, "iou_threshold must lie in (0,1)");
    if (!(neg_pos_ratio > 0.0)) fail(ErrorKind::InvalidSpec, "neg_pos_ratio must be > 0");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
      fail(ErrorKind::InvalidSpec, "flip_probability must lie in [0,1]");
    }
  }
};

/// Linear warmup from warmup_start() to base_lr, then cosine decay reaching
/// zero at the horizon.
inline double lr_at(std::uint64_t step, const TrainConfig& cfg) {
  if (step > cfg.horizon) {
    fail(ErrorKind::InvalidInput, "step " + std::to_string(step) + " is past the schedule horizon");
  }
  if (step < cfg.warmup_steps) {
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    return cfg.warmup_start() + (cfg.base_lr - cfg.warmup_start()) * frac;
  }
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(cfg.horizon - cfg.warmup_steps);
  return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

/// One decoded training image (CHW, values in [0,1]) and its boxes.
struct TrainingExample {
  std::vector<float> image;
  GroundTruth gt;
};

/// Left-right mirror of a CHW image and its boxes.
inline TrainingExample flip_horizontal(const TrainingExample& ex, int width, int height) {
  TrainingExample out = ex;
  const std::size_t w = static_cast<std::size_t>(width);
  const std::size_t rows = ex.image.size() / w;
  if (rows * w != ex.image.size() || rows % static_cast<std::size_t>(height) != 0) {
    fail(ErrorKind::ShapeError, "image size does not match the given width and height");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::reverse(out.image.begin() + static_cast<std::ptrdiff_t>(r * w),
                 out.image.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
  }
  for (auto& b : out.gt.boxes) b = {1.0 - b.xmax, b.ymin, 1.0 - b.xmin, b.ymax};
  return out;
}

template <typename T>
struct PreparedExample {
  std::vector<T> image;
  GroundTruth gt;
  MatchResult match;
  std::vector<OffsetVector> targets;
};

template <typename T>
PreparedExample<T> prepare_example(const TinyNet<T>& model, const TrainingExample& ex, double iou_threshold) {
  if (ex.image.size() != model.input_size()) {
    fail(ErrorKind::ShapeError, "training image does not match the model input size");
  }
  ex.gt.validate(model.config().num_classes);
  PreparedExample<T> p;
  p.image.assign(ex.image.begin(), ex.image.end());
  p.gt = ex.gt;
  p.match = match_anchors(model.anchors(), p.gt, iou_threshold);
  p.targets = encode_targets(p.match, p.gt, model.anchors());
  return p;
}

/// Mean multibox losses over the batch plus regularization. With
/// `with_grad`, parameter gradients of the total are left in each grad
/// buffer (previous contents are discarded).
template <typename T>
LossBreakdown batch_loss(TinyNet<T>& model, const std::vector<const PreparedExample<T>*>& batch,
                         double neg_pos_ratio, bool with_grad) {
  if (batch.empty()) fail(ErrorKind::InvalidInput, "empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double cls = 0.0, loc = 0.0;
  if (with_grad) model.zero_grad();
  std::vector<std::vector<T>> grads;
  auto params = model.parameters();
  typename TinyNet<T>::Cache cache;
  for (const auto* ex : batch) {
    const Predictions preds = model.forward(ex->image, cache);
    MultiboxLoss l = multibox_loss(ex->match, preds, ex->gt, ex->targets, neg_pos_ratio);
    cls += l.classification * inv_b;
    loc += l.localization * inv_b;
    if (!with_grad) continue;
    for (auto& g : l.grad_loc) {
      for (std::size_t m = 0; m < 4; ++m) g[m] *= inv_b;
    }
    for (auto& g : l.grad_logits) g *= inv_b;
    grads.clear();
    model.backward(cache, l.grad_loc, l.grad_logits, grads);
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < grads[k].size(); ++i) params[k]->grad[i] += grads[k][i];
    }
  }
  if (with_grad) model.add_regularization_grad();
  return total_loss(cls, loc, model.regularization());
}

struct TrainLogEvent {
  std::uint64_t step = 0;
  double per_step_seconds = 0.0;
  LossBreakdown breakdown;
  std::vector<std::string> lines;  // format_training_log output
};

using TrainSink = std::function<void(const TrainLogEvent&)>;

/// SGD with momentum over a fixed dataset. Batch composition depends only
/// on (seed, step), so a restored run replays exactly.
template <typename T>
class Trainer {
 public:
  Trainer(TinyNet<T>& model, const std::vector<TrainingExample>& data, TrainConfig cfg)
      : model_(model), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (data.empty()) fail(ErrorKind::InvalidInput, "training dataset is empty");
    examples_.reserve(data.size());
    for (const auto& ex : data) examples_.push_back(prepare_example(model_, ex, cfg_.iou_threshold));
    if (cfg_.flip_probability > 0.0) {
      const auto& mc = model_.config();
      for (const auto& ex : data) {
        flipped_.push_back(
            prepare_example(model_, flip_horizontal(ex, mc.input_width, mc.input_height), cfg_.iou_threshold));
      }
    }
    for (auto* p : model_.parameters()) velocity_.emplace_back(p->size(), T(0));
  }

  std::uint64_t step() const noexcept { return step_; }
  const TrainConfig& config() const noexcept { return cfg_; }

  std::vector<const PreparedExample<T>*> batch_for(std::uint64_t step) const {
    std::vector<const PreparedExample<T>*> batch;
    const std::uint64_t n = examples_.size();
    for (std::size_t b = 0; b < cfg_.batch_size; ++b) {
      const std::uint64_t k = (step - 1) * cfg_.batch_size + b;
      const std::uint64_t epoch = k / n;
      if (epoch != perm_epoch_ || perm_.empty()) {
        perm_.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) perm_[i] = i;
        Rng rng(mix_seed(cfg_.seed, epoch));
        rng.shuffle(perm_);
        perm_epoch_ = epoch;
      }
      const std::size_t i = perm_[k % n];
      bool flip = false;
      if (cfg_.flip_probability > 0.0) {
        Rng coin(mix_seed(mix_seed(cfg_.seed ^ 0x666c6970u, step), b));
        flip = coin.uniform() < cfg_.flip_probability;
      }
      batch.push_back(flip ? &flipped_[i] : &examples_[i]);
    }
    return batch;
  }

  /// Runs one update and returns the loss measured before it.
  LossBreakdown advance() {
    const std::uint64_t next = step_ + 1;
    const double lr = lr_at(next, cfg_);
    LossBreakdown loss = batch_loss(model_, batch_for(next), cfg_.neg_pos_ratio, true);
    loss.learning_rate = lr;
    if (!std::isfinite(loss.total_loss)) {
      fail(ErrorKind::NonFiniteResult, "non-finite loss at step " + std::to_string(next));
    }
    auto params = model_.parameters();
    T scale = T(1);
    if (cfg_.clip_grad_norm > 0.0) {
      double sq = 0.0;
      for (auto* p : params) {
        for (T g : p->grad) sq += static_cast<double>(g) * static_cast<double>(g);
      }
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_grad_norm) scale = static_cast<T>(cfg_.clip_grad_norm / norm);
    }
    const T mom = static_cast<T>(cfg_.momentum);
    const T rate = static_cast<T>(lr);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& v = velocity_[k];
      auto& p = *params[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = mom * v[i] + scale * p.grad[i];
        p.values[i] -= rate * v[i];
      }
    }
    step_ = next;
    return loss;
  }

  /// Model parameters plus optimizer state ("momentum/" tensors).
  Checkpoint checkpoint() const {
    Checkpoint ckpt = capture_model(static_cast<const TinyNet<T>&>(model_), step_);
    const auto params = static_cast<const TinyNet<T>&>(model_).parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      NamedTensor t;
      t.name = "momentum/" + params[k]->name;
      for (int d : params[k]->shape) t.dims.push_back(static_cast<std::uint32_t>(d));
      for (T v : velocity_[k]) t.values.push_back(static_cast<float>(v));
      ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
  }

  void restore(const Checkpoint& ckpt) {
    load_model(model_, ckpt);
    const auto params = model_.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      const NamedTensor* t = ckpt.find("momentum/" + params[k]->name);
      if (!t) {
        std::fill(velocity_[k].begin(), velocity_[k].end(), T(0));
        continue;
      }
      if (t->values.size() != velocity_[k].size()) {
        fail(ErrorKind::CorruptCheckpoint, "momentum tensor size mismatch for " + params[k]->name);
      }
      for (std::size_t i = 0; i < t->values.size(); ++i) velocity_[k][i] = static_cast<T>(t->values[i]);
    }
    if (ckpt.step > cfg_.steps) fail(ErrorKind::InvalidInput, "checkpoint is past the configured step count");
    step_ = ckpt.step;
  }

  /// Trains up to cfg.steps, logging every log_interval steps (and at the
  /// last step) and checkpointing every checkpoint_interval steps and at the
  /// end when a directory is given.
  Checkpoint run(const TrainSink& sink = {}, const std::optional<fs::path>& checkpoint_dir = {}) {
    using clock = std::chrono::steady_clock;
    auto window_start = clock::now();
    std::uint64_t window_steps = 0;
    while (step_ < cfg_.steps) {
      const LossBreakdown loss = advance();
      ++window_steps;
      const bool last = step_ == cfg_.steps;
      if (step_ % cfg_.log_interval == 0 || last) {
        const auto now = clock::now();
        const double secs = std::chrono::duration<double>(now - window_start).count() /
                            static_cast<double>(window_steps);
        window_start = now;
        window_steps = 0;
        if (sink) sink(TrainLogEvent{step_, secs, loss, format_training_log(step_, secs, loss)});
      }
      if (checkpoint_dir && (step_ % cfg_.checkpoint_interval == 0 || last)) {
        save_checkpoint(checkpoint(), *checkpoint_dir);
      }
    }
    return checkpoint();
  }

 private:
  TinyNet<T>& model_;
  TrainConfig cfg_;
  std::vector<PreparedExample<T>> examples_;
  std::vector<PreparedExample<T>> flipped_;
  std::vector<std::vector<T>> velocity_;
  std::uint64_t step_ = 0;
  mutable std::vector<std::uint64_t> perm_;
  mutable std::uint64_t perm_epoch_ = 0;
};

/// Convenience wrapper: train `model` from scratch (or from the latest
/// checkpoint in `checkpoint_dir` when `resume` is set).
inline Checkpoint train(TinyNet<float>& model, const std::vector<TrainingExample>& dataset,
                        const TrainConfig& cfg, const TrainSink& sink = {},
                        const std::optional<fs::path>& checkpoint_dir = {}, bool resume = false) {
  Trainer<float> trainer(model, dataset, cfg);
  if (resume && checkpoint_dir && latest_checkpoint_path(*checkpoint_dir)) {
    trainer.restore(restore_latest(*checkpoint_dir));
  }
  return trainer.run(sink, checkpoint_dir);
}

}  // namespace signdet
