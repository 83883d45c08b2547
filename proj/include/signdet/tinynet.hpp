#pragma once

// A small single-shot detector: stages of (3x3 conv, relu, 2x2 max-pool),
// with 3x3 (or 1x1) localization/classification heads on the last stages,
// one head pair per anchor layer. Gradients are derived by hand.
//
// T selects precision: float for training, double for gradient checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "signdet/anchors.hpp"
#include "signdet/error.hpp"
#include "signdet/multibox.hpp"
#include "signdet/random.hpp"

namespace signdet {

template <typename T>
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> values;
  std::vector<T> grad;
  bool is_weight = true;  // false for biases (no weight decay)

  Tensor() = default;
  Tensor(std::string n, std::vector<int> s, bool weight)
      : name(std::move(n)), shape(std::move(s)), is_weight(weight) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    values.assign(count, T(0));
    grad.assign(count, T(0));
  }

  std::size_t size() const noexcept { return values.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

struct ModelConfig {
  int input_width = 96;
  int input_height = 96;
  int input_channels = 3;
  std::vector<int> channels{8, 16, 24, 32};
  AnchorSpec anchors = AnchorSpec::desk_default();
  int num_classes = 26;
  double weight_decay = 4e-4;
  std::uint64_t seed = 1;
  double background_bias = 2.0;
  int head_kernel = 3;         // 1 or 3
  double input_offset = 0.5;   // subtracted from every input value


  int total_stride() const { return 1 << channels.size(); }

  void validate() const {
    if (num_classes < 1) fail(ErrorKind::InvalidSpec, "num_classes must be >= 1");
    if (channels.empty()) fail(ErrorKind::InvalidSpec, "model needs at least one stage");
    for (int c : channels) {
      if (c <= 0) fail(ErrorKind::InvalidSpec, "stage channel widths must be positive");
    }
    if (input_width <= 0 || input_height <= 0 || input_channels <= 0) {
      fail(ErrorKind::InvalidSpec, "input dimensions must be positive");
    }
    if (input_width % total_stride() != 0 || input_height % total_stride() != 0) {
      fail(ErrorKind::InvalidSpec, "input size must be divisible by the total stride " +
                                       std::to_string(total_stride()));
    }
    if (head_kernel != 1 && head_kernel != 3) fail(ErrorKind::InvalidSpec, "head_kernel must be 1 or 3");
    if (!std::isfinite(input_offset)) fail(ErrorKind::InvalidSpec, "input_offset must be finite");
    if (!(weight_decay >= 0.0)) fail(ErrorKind::InvalidSpec, "weight_decay must be >= 0");
    anchors.validate();
    if (anchors.layers.size() > channels.size()) {
      fail(ErrorKind::InvalidSpec, "more anchor layers than network stages");
    }
    // Anchor layer l sits on stage (S - L + l); its grid must match that map.
    const std::size_t first = channels.size() - anchors.layers.size();
    for (std::size_t l = 0; l < anchors.layers.size(); ++l) {
      const int stride = 1 << (first + l + 1);
      const auto& layer = anchors.layers[l];
      if (layer.grid_w != input_width / stride || layer.grid_h != input_height / stride) {
        fail(ErrorKind::InvalidSpec, "anchor layer " + std::to_string(l) + " grid " +
                                         std::to_string(layer.grid_w) + "x" + std::to_string(layer.grid_h) +
                                         " does not match the stride-" + std::to_string(stride) +
                                         " feature map");
      }
    }
  }
};

template <typename T>
class TinyNet {
 public:
  struct Conv {
    int in = 0, out = 0, k = 1;
    Tensor<T> weights;
    Tensor<T> biases;
  };

  /// Per-image activations kept for the backward pass.
  struct Cache {
    std::vector<std::vector<T>> padded;  // padded conv input per stage
    std::vector<std::vector<T>> act;     // relu output per stage
    std::vector<std::vector<int>> argmax;
    std::vector<std::vector<T>> pooled;  // stage outputs
    bool valid = false;
  };

  explicit TinyNet(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    anchors_ = generate_anchors(config_.anchors);
    const int stages = static_cast<int>(config_.channels.size());
    int in = config_.input_channels;
    for (int s = 0; s < stages; ++s) {
      const int out = config_.channels[s];
      stages_.push_back(make_conv("stage" + std::to_string(s + 1) + "/conv", in, out, 3));
      in = out;
    }
    const std::size_t first = config_.channels.size() - config_.anchors.layers.size();
    for (std::size_t l = 0; l < config_.anchors.layers.size(); ++l) {
      const int c = config_.channels[first + l];
      const int a = static_cast<int>(config_.anchors.anchors_per_cell(l));
      const std::string p = "head" + std::to_string(l + 1);
      loc_heads_.push_back(make_conv(p + "/loc", c, a * 4, config_.head_kernel));
      cls_heads_.push_back(make_conv(p + "/cls", c, a * (config_.num_classes + 1), config_.head_kernel));
    }
    initialize(config_.seed);
  }

  const ModelConfig& config() const noexcept { return config_; }
  const AnchorSet& anchors() const noexcept { return anchors_; }
  std::size_t num_logits() const noexcept { return static_cast<std::size_t>(config_.num_classes) + 1; }
  std::size_t input_size() const noexcept {
    return static_cast<std::size_t>(config_.input_channels) * config_.input_width * config_.input_height;
  }

  /// Fan-in scaled normal weights, zero biases, background bias raised.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    auto init = [&](Conv& c, double gain) {
      const double std_dev = std::sqrt(gain / (c.in * c.k * c.k));
      for (auto& w : c.weights.values) w = static_cast<T>(rng.normal() * std_dev);
      std::fill(c.biases.values.begin(), c.biases.values.end(), T(0));
    };
    for (auto& c : stages_) init(c, 2.0);
    for (auto& c : loc_heads_) init(c, 1.0);
    for (auto& c : cls_heads_) {
      init(c, 1.0);
      const int per = config_.num_classes + 1;
      for (int a = 0; a < c.out / per; ++a) c.biases.values[a * per] = static_cast<T>(config_.background_bias);
    }
  }

  std::vector<Tensor<T>*> parameters() {
    std::vector<Tensor<T>*> out;
    auto add = [&](std::vector<Conv>& v) {
      for (auto& c : v) {
        out.push_back(&c.weights);
        out.push_back(&c.biases);
      }
    };
    add(stages_);
    add(loc_heads_);
    add(cls_heads_);
    return out;
  }

  std::vector<const Tensor<T>*> parameters() const {
    std::vector<const Tensor<T>*> out;
    for (auto* p : const_cast<TinyNet*>(this)->parameters()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  /// weight_decay * sum(w^2)/2 over weights only.
  double regularization() const {
    std::vector<std::span<const T>> weights;
    for (const auto* p : parameters()) {
      if (p->is_weight) weights.emplace_back(p->values);
    }
    return regularization_loss(weights, config_.weight_decay);
  }

  /// Adds weight_decay * w to every weight gradient.
  void add_regularization_grad() {
    const T wd = static_cast<T>(config_.weight_decay);
    for (auto* p : parameters()) {
      if (!p->is_weight) continue;
      for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += wd * p->values[i];
    }
  }

  /// Forward one CHW image; fills `cache` for a later backward.
  Predictions forward(std::span<const T> image, Cache& cache) const {
    if (image.size() != input_size()) {
      fail(ErrorKind::ShapeError, "image has " + std::to_string(image.size()) + " values, model expects " +
                                      std::to_string(input_size()));
    }
    const std::size_t stages = stages_.size();
    cache.padded.resize(stages);
    cache.act.resize(stages);
    cache.argmax.resize(stages);
    cache.pooled.resize(stages);
    int h = config_.input_height, w = config_.input_width;
    std::span<const T> x = image;
    std::vector<T> centered;
    if (config_.input_offset != 0.0) {
      const T shift = static_cast<T>(config_.input_offset);
      centered.assign(image.begin(), image.end());
      for (auto& v : centered) v -= shift;
      x = centered;
    }
    for (std::size_t s = 0; s < stages; ++s) {
      const Conv& conv = stages_[s];
      pad(x, conv.in, h, w, 1, cache.padded[s]);
      cache.act[s].assign(static_cast<std::size_t>(conv.out) * h * w, T(0));
      conv_forward(conv, cache.padded[s], h, w, cache.act[s]);
      for (auto& v : cache.act[s]) v = v > T(0) ? v : T(0);
      maxpool_forward(cache.act[s], conv.out, h, w, cache.pooled[s], cache.argmax[s]);
      h /= 2;
      w /= 2;
      x = cache.pooled[s];
    }

    Predictions preds(anchors_.size(), num_logits());
    const std::size_t first = stages - loc_heads_.size();
    std::vector<T> out;
    for (std::size_t l = 0; l < loc_heads_.size(); ++l) {
      const auto& feat = cache.pooled[first + l];
      const auto& layer = config_.anchors.layers[l];
      const std::size_t cells = static_cast<std::size_t>(layer.grid_w) * layer.grid_h;
      const std::size_t per_cell = config_.anchors.anchors_per_cell(l);
      const std::size_t base = anchors_.layer_offsets()[l];

      head_forward(loc_heads_[l], feat, layer, out);
      for (std::size_t p = 0; p < cells; ++p) {
        for (std::size_t a = 0; a < per_cell; ++a) {
          for (std::size_t m = 0; m < 4; ++m) {
            preds.loc[base + p * per_cell + a][m] = static_cast<double>(out[(a * 4 + m) * cells + p]);
          }
        }
      }
      head_forward(cls_heads_[l], feat, layer, out);
      const std::size_t nl = num_logits();
      for (std::size_t p = 0; p < cells; ++p) {
        for (std::size_t a = 0; a < per_cell; ++a) {
          auto row = preds.row(base + p * per_cell + a);
          for (std::size_t q = 0; q < nl; ++q) row[q] = static_cast<double>(out[(a * nl + q) * cells + p]);
        }
      }
    }
    cache.valid = true;
    return preds;
  }

  /// Inference without keeping a cache around.
  Predictions infer(std::span<const T> image) const {
    Cache cache;
    return forward(image, cache);
  }

  /// Accumulates parameter gradients (into `grads`, same order as
  /// parameters()) given the loss gradient with respect to the predictions.
  void backward(const Cache& cache, std::span<const OffsetVector> grad_loc,
                std::span<const double> grad_logits, std::vector<std::vector<T>>& grads) const {
    if (!cache.valid) fail(ErrorKind::StateError, "backward called without a matching forward");
    if (grad_loc.size() != anchors_.size() || grad_logits.size() != anchors_.size() * num_logits()) {
      fail(ErrorKind::ShapeError, "loss gradient does not match the anchor layout");
    }
    ensure_grad_buffers(grads);
    const std::size_t stages = stages_.size();
    const std::size_t first = stages - loc_heads_.size();
    const std::size_t n_stage_params = stages * 2;

    std::vector<std::vector<T>> dpooled(stages);
    for (std::size_t s = 0; s < stages; ++s) dpooled[s].assign(cache.pooled[s].size(), T(0));

    std::vector<T> dout;
    for (std::size_t l = 0; l < loc_heads_.size(); ++l) {
      const auto& feat = cache.pooled[first + l];
      const auto& layer = config_.anchors.layers[l];
      const std::size_t cells = static_cast<std::size_t>(layer.grid_w) * layer.grid_h;
      const std::size_t per_cell = config_.anchors.anchors_per_cell(l);
      const std::size_t base = anchors_.layer_offsets()[l];
      const std::size_t nl = num_logits();

      dout.assign(per_cell * 4 * cells, T(0));
      for (std::size_t p = 0; p < cells; ++p) {
        for (std::size_t a = 0; a < per_cell; ++a) {
          for (std::size_t m = 0; m < 4; ++m) {
            dout[(a * 4 + m) * cells + p] = static_cast<T>(grad_loc[base + p * per_cell + a][m]);
          }
        }
      }
      const std::size_t li = n_stage_params + l * 2;
      head_backward(loc_heads_[l], feat, layer, dout, grads[li], grads[li + 1], dpooled[first + l]);

      dout.assign(per_cell * nl * cells, T(0));
      for (std::size_t p = 0; p < cells; ++p) {
        for (std::size_t a = 0; a < per_cell; ++a) {
          const std::size_t anchor = base + p * per_cell + a;
          for (std::size_t q = 0; q < nl; ++q) {
            dout[(a * nl + q) * cells + p] = static_cast<T>(grad_logits[anchor * nl + q]);
          }
        }
      }
      const std::size_t ci = n_stage_params + loc_heads_.size() * 2 + l * 2;
      head_backward(cls_heads_[l], feat, layer, dout, grads[ci], grads[ci + 1], dpooled[first + l]);
    }

    int h = config_.input_height >> (stages - 1);
    int w = config_.input_width >> (stages - 1);
    std::vector<T> dact, dpadded;
    for (std::size_t s = stages; s-- > 0;) {
      const Conv& conv = stages_[s];
      dact.assign(cache.act[s].size(), T(0));
      for (std::size_t o = 0; o < dpooled[s].size(); ++o) {
        dact[static_cast<std::size_t>(cache.argmax[s][o])] += dpooled[s][o];
      }
      for (std::size_t i = 0; i < dact.size(); ++i) {
        if (!(cache.act[s][i] > T(0))) dact[i] = T(0);
      }
      const bool need_input_grad = s > 0;
      conv_backward(conv, cache.padded[s], h, w, dact, grads[s * 2], grads[s * 2 + 1],
                    need_input_grad ? &dpadded : nullptr);
      if (need_input_grad) unpad_add(dpadded, conv.in, h, w, 1, dpooled[s - 1]);
      h *= 2;
      w *= 2;
    }
  }

  /// Forward over a batch, keeping caches for backward(grad...).
  std::vector<Predictions> forward(const std::vector<std::vector<T>>& batch) {
    caches_.assign(batch.size(), Cache{});
    std::vector<Predictions> out;
    out.reserve(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) out.push_back(forward(batch[b], caches_[b]));
    return out;
  }

  /// Backward for the batch of the last forward(batch); accumulates into
  /// every parameter's grad buffer.
  void backward(const std::vector<MultiboxLoss>& losses) {
    if (caches_.empty() || losses.size() != caches_.size()) {
      fail(ErrorKind::StateError, "backward requires a forward over the same batch first");
    }
    auto params = parameters();
    std::vector<std::vector<T>> grads;
    for (std::size_t b = 0; b < losses.size(); ++b) {
      grads.clear();
      backward(caches_[b], losses[b].grad_loc, losses[b].grad_logits, grads);
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < grads[k].size(); ++i) params[k]->grad[i] += grads[k][i];
      }
    }
    caches_.clear();
  }

  void ensure_grad_buffers(std::vector<std::vector<T>>& grads) const {
    const auto params = parameters();
    if (grads.size() != params.size()) grads.resize(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (grads[k].size() != params[k]->size()) grads[k].assign(params[k]->size(), T(0));
    }
  }

 private:
  Conv make_conv(const std::string& name, int in, int out, int k) {
    Conv c;
    c.in = in;
    c.out = out;
    c.k = k;
    c.weights = Tensor<T>(name + "/weights", {out, in, k, k}, true);
    c.biases = Tensor<T>(name + "/biases", {out}, false);
    return c;
  }

  static void pad(std::span<const T> x, int c, int h, int w, int p, std::vector<T>& out) {
    const int ph = h + 2 * p, pw = w + 2 * p;
    out.assign(static_cast<std::size_t>(c) * ph * pw, T(0));
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < h; ++y) {
        const T* src = x.data() + (static_cast<std::size_t>(ch) * h + y) * w;
        T* dst = out.data() + (static_cast<std::size_t>(ch) * ph + y + p) * pw + p;
        std::copy(src, src + w, dst);
      }
    }
  }

  /// Adds the interior of a padded gradient into `out`.
  static void unpad_add(const std::vector<T>& padded, int c, int h, int w, int p, std::vector<T>& out) {
    const int ph = h + 2 * p, pw = w + 2 * p;
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < h; ++y) {
        const T* src = padded.data() + (static_cast<std::size_t>(ch) * ph + y + p) * pw + p;
        T* dst = out.data() + (static_cast<std::size_t>(ch) * h + y) * w;
        for (int x = 0; x < w; ++x) dst[x] += src[x];
      }
    }
  }

  static void conv_forward(const Conv& conv, const std::vector<T>& padded, int h, int w, std::vector<T>& out) {
    const int k = conv.k;
    const int pw = w + k - 1, ph = h + k - 1;
    const T* wt = conv.weights.values.data();
    for (int o = 0; o < conv.out; ++o) {
      T* dst_plane = out.data() + static_cast<std::size_t>(o) * h * w;
      std::fill(dst_plane, dst_plane + static_cast<std::size_t>(h) * w, conv.biases.values[o]);
      for (int c = 0; c < conv.in; ++c) {
        const T* src_plane = padded.data() + static_cast<std::size_t>(c) * ph * pw;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wt[((static_cast<std::size_t>(o) * conv.in + c) * k + ky) * k + kx];
            for (int y = 0; y < h; ++y) {
              const T* src = src_plane + static_cast<std::size_t>(y + ky) * pw + kx;
              T* dst = dst_plane + static_cast<std::size_t>(y) * w;
              for (int x = 0; x < w; ++x) dst[x] += wv * src[x];
            }
          }
        }
      }
    }
  }

  static void conv_backward(const Conv& conv, const std::vector<T>& padded, int h, int w,
                            const std::vector<T>& dout, std::vector<T>& dweights, std::vector<T>& dbiases,
                            std::vector<T>* dpadded) {
    const int k = conv.k;
    const int pw = w + k - 1, ph = h + k - 1;
    const T* wt = conv.weights.values.data();
    if (dpadded) dpadded->assign(padded.size(), T(0));
    for (int o = 0; o < conv.out; ++o) {
      const T* g_plane = dout.data() + static_cast<std::size_t>(o) * h * w;
      T bsum = T(0);
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) bsum += g_plane[i];
      dbiases[o] += bsum;
      for (int c = 0; c < conv.in; ++c) {
        const std::size_t plane = static_cast<std::size_t>(c) * ph * pw;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const std::size_t widx = ((static_cast<std::size_t>(o) * conv.in + c) * k + ky) * k + kx;
            const T wv = wt[widx];
            T acc = T(0);
            for (int y = 0; y < h; ++y) {
              const T* src = padded.data() + plane + static_cast<std::size_t>(y + ky) * pw + kx;
              const T* g = g_plane + static_cast<std::size_t>(y) * w;
              for (int x = 0; x < w; ++x) acc += g[x] * src[x];
              if (dpadded) {
                T* d = dpadded->data() + plane + static_cast<std::size_t>(y + ky) * pw + kx;
                for (int x = 0; x < w; ++x) d[x] += wv * g[x];
              }
            }
            dweights[widx] += acc;
          }
        }
      }
    }
  }

  static void maxpool_forward(const std::vector<T>& in, int c, int h, int w, std::vector<T>& out,
                              std::vector<int>& argmax) {
    const int oh = h / 2, ow = w / 2;
    out.assign(static_cast<std::size_t>(c) * oh * ow, T(0));
    argmax.assign(out.size(), 0);
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          int best = (ch * h + 2 * y) * w + 2 * x;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const std::size_t o = (static_cast<std::size_t>(ch) * oh + y) * ow + x;
          out[o] = in[best];
          argmax[o] = best;
        }
      }
    }
  }

  static void head_forward(const Conv& conv, const std::vector<T>& feat, const AnchorLayer& layer,
                           std::vector<T>& out) {
    const std::size_t cells = static_cast<std::size_t>(layer.grid_w) * layer.grid_h;
    if (conv.k == 1) return pointwise_forward(conv, feat, cells, out);
    std::vector<T> padded;
    pad(feat, conv.in, layer.grid_h, layer.grid_w, conv.k / 2, padded);
    out.assign(static_cast<std::size_t>(conv.out) * cells, T(0));
    conv_forward(conv, padded, layer.grid_h, layer.grid_w, out);
  }

  static void head_backward(const Conv& conv, const std::vector<T>& feat, const AnchorLayer& layer,
                            const std::vector<T>& dout, std::vector<T>& dweights, std::vector<T>& dbiases,
                            std::vector<T>& dfeat) {
    const std::size_t cells = static_cast<std::size_t>(layer.grid_w) * layer.grid_h;
    if (conv.k == 1) return pointwise_backward(conv, feat, cells, dout, dweights, dbiases, dfeat);
    std::vector<T> padded, dpadded;
    pad(feat, conv.in, layer.grid_h, layer.grid_w, conv.k / 2, padded);
    conv_backward(conv, padded, layer.grid_h, layer.grid_w, dout, dweights, dbiases, &dpadded);
    unpad_add(dpadded, conv.in, layer.grid_h, layer.grid_w, conv.k / 2, dfeat);
  }

  static void pointwise_forward(const Conv& conv, const std::vector<T>& feat, std::size_t cells,
                                std::vector<T>& out) {
    out.assign(static_cast<std::size_t>(conv.out) * cells, T(0));
    for (int o = 0; o < conv.out; ++o) {
      T* dst = out.data() + o * cells;
      std::fill(dst, dst + cells, conv.biases.values[o]);
      for (int c = 0; c < conv.in; ++c) {
        const T wv = conv.weights.values[static_cast<std::size_t>(o) * conv.in + c];
        const T* src = feat.data() + c * cells;
        for (std::size_t p = 0; p < cells; ++p) dst[p] += wv * src[p];
      }
    }
  }

  static void pointwise_backward(const Conv& conv, const std::vector<T>& feat, std::size_t cells,
                                 const std::vector<T>& dout, std::vector<T>& dweights,
                                 std::vector<T>& dbiases, std::vector<T>& dfeat) {
    for (int o = 0; o < conv.out; ++o) {
      const T* g = dout.data() + o * cells;
      T bsum = T(0);
      for (std::size_t p = 0; p < cells; ++p) bsum += g[p];
      dbiases[o] += bsum;
      for (int c = 0; c < conv.in; ++c) {
        const std::size_t widx = static_cast<std::size_t>(o) * conv.in + c;
        const T wv = conv.weights.values[widx];
        const T* src = feat.data() + c * cells;
        T* d = dfeat.data() + c * cells;
        T acc = T(0);
        for (std::size_t p = 0; p < cells; ++p) {
          acc += g[p] * src[p];
          d[p] += wv * g[p];
        }
        dweights[widx] += acc;
      }
    }
  }

  ModelConfig config_;
  AnchorSet anchors_;
  std::vector<Conv> stages_;
  std::vector<Conv> loc_heads_;
  std::vector<Conv> cls_heads_;
  std::vector<Cache> caches_;
};

}  // namespace signdet
