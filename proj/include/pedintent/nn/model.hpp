#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/nn/layers.hpp"
#include "pedintent/nn/tensor.hpp"
#include "pedintent/rng.hpp"

namespace pedintent::nn {

// The default values reproduce the full architecture: growth rate 24, three
// 4-layer dense blocks on 16-frame 100x100 crops, softmax over two classes.
// The temporal axis keeps depth 16 through the stem (stride (1,2,2) twice)
// and halves at each transition, which is the only stride assignment
// consistent with the published output-size schedule.
struct StDenseNetConfig {
  int input_channels = 3;
  int input_depth = 16;
  int input_height = 100;
  int input_width = 100;
  int num_classes = 2;

  int growth_rate = 24;
  int num_blocks = 3;
  int layers_per_block = 4;
  int stem_channels = 48;  // 2k
  std::array<int, 3> stem_kernel{7, 7, 7};
  std::array<int, 3> stem_stride{1, 2, 2};
  std::array<int, 3> stem_pool_kernel{3, 3, 3};
  std::array<int, 3> stem_pool_stride{1, 2, 2};
  std::array<int, 3> stem_pool_padding{1, 1, 1};
  double compression = 0.5;  // transition channel factor
  // One channel-preserving 1x1x1 composite at the start of each block by
  // default; flipping this switches to per-layer (4k) bottlenecks instead.
  bool per_layer_bottleneck = false;

  // Input pixels are scaled to [0,1] then standardized with these constants;
  // they travel with the weights so inference always matches training.
  double pixel_mean = 0.5;
  double pixel_std = 0.25;

  void validate() const {
    if (input_channels < 1 || input_depth < 1 || input_height < 1 || input_width < 1) {
      throw ValidationError("StDenseNetConfig: input dims must be >= 1");
    }
    if (num_classes < 2) throw ValidationError("StDenseNetConfig: num_classes must be >= 2");
    if (growth_rate < 1 || num_blocks < 1 || layers_per_block < 0 || stem_channels < 1) {
      throw ValidationError("StDenseNetConfig: bad block schedule");
    }
    if (!(compression > 0.0 && compression <= 1.0)) {
      throw ValidationError("StDenseNetConfig: compression must be in (0, 1]");
    }
    if (!(pixel_std > 0.0)) throw ValidationError("StDenseNetConfig: pixel_std must be > 0");
  }

  // CI-scale preset: same topology, much smaller tensors. Windows are
  // bilinearly resized to the model input when it differs from the 100x100
  // crop size.
  static StDenseNetConfig reduced() {
    StDenseNetConfig c;
    c.input_height = 32;
    c.input_width = 32;
    c.growth_rate = 8;
    c.num_blocks = 2;
    c.layers_per_block = 2;
    c.stem_channels = 8;
    c.stem_kernel = {5, 5, 5};
    return c;
  }

  // Tiny preset for the finite-difference harness: one block, growth rate 4,
  // 8x8 frames, depth 4.
  static StDenseNetConfig gradcheck() {
    StDenseNetConfig c;
    c.input_depth = 4;
    c.input_height = 8;
    c.input_width = 8;
    c.growth_rate = 4;
    c.num_blocks = 1;
    c.layers_per_block = 2;
    c.stem_channels = 6;
    c.stem_kernel = {3, 3, 3};
    return c;
  }
};

// BN -> ReLU -> Conv composite, the "conv" unit of every block ("pre-activation"
// form). Conv bias stays off: a batch norm follows every composite output
// before any nonlinearity consumes it, making the bias redundant with beta.
template <typename T>
struct BnReluConv {
  BatchNorm3d<T> bn;
  Relu<T> relu;
  Conv3d<T> conv;

  BnReluConv() = default;
  BnReluConv(int in_channels, int out_channels, std::array<int, 3> kernel,
             std::array<int, 3> padding)
      : bn(in_channels),
        conv(in_channels, out_channels, kernel, {1, 1, 1}, padding, /*has_bias=*/false) {}

  Tensor5<T> forward(const Tensor5<T>& x, bool train, bool cache = true) {
    return conv.forward(relu.forward(bn.forward(x, train, cache), cache), cache);
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    return bn.backward(relu.backward(conv.backward(grad_out)));
  }

  void zero_grad() {
    bn.zero_grad();
    conv.zero_grad();
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    bn.collect_params(prefix + ".bn", out);
    conv.collect_params(prefix + ".conv", out);
  }

  void collect_state(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    bn.collect_state(prefix + ".bn", out);
  }

  void init(Rng& rng) { conv.init(rng); }
};

// Dense connectivity: unit l consumes the channel concatenation of the
// bottleneck output and every earlier unit's output and contributes k new
// channels. Output channels = bottleneck channels + L * k.
template <typename T>
class DenseBlock3d {
public:
  DenseBlock3d() = default;

  DenseBlock3d(int in_channels, int num_layers, int growth_rate, bool per_layer_bottleneck)
      : in_c_(in_channels),
        num_layers_(num_layers),
        growth_rate_(growth_rate),
        per_layer_bottleneck_(per_layer_bottleneck) {
    bottleneck_ = BnReluConv<T>(in_channels, in_channels, {1, 1, 1}, {0, 0, 0});
    for (int l = 0; l < num_layers; ++l) {
      int unit_in = in_channels + l * growth_rate;
      if (per_layer_bottleneck_) {
        int squeeze = 4 * growth_rate;
        unit_squeezes_.emplace_back(unit_in, squeeze, std::array<int, 3>{1, 1, 1},
                                    std::array<int, 3>{0, 0, 0});
        units_.emplace_back(squeeze, growth_rate, std::array<int, 3>{3, 3, 3},
                            std::array<int, 3>{1, 1, 1});
      } else {
        units_.emplace_back(unit_in, growth_rate, std::array<int, 3>{3, 3, 3},
                            std::array<int, 3>{1, 1, 1});
      }
    }
  }

  int in_channels() const { return in_c_; }
  int out_channels() const { return in_c_ + num_layers_ * growth_rate_; }

  Tensor5<T> forward(const Tensor5<T>& x, bool train, bool cache = true) {
    if (x.c() != in_c_) throw ValidationError("DenseBlock3d: channel mismatch");
    features_.clear();
    features_.push_back(bottleneck_.forward(x, train, cache));
    for (int l = 0; l < num_layers_; ++l) {
      std::vector<const Tensor5<T>*> parts;
      for (const auto& f : features_) parts.push_back(&f);
      Tensor5<T> unit_in = concat_channels(parts);
      if (per_layer_bottleneck_) {
        unit_in = unit_squeezes_[l].forward(unit_in, train, cache);
      }
      features_.push_back(units_[l].forward(unit_in, train, cache));
    }
    std::vector<const Tensor5<T>*> parts;
    for (const auto& f : features_) parts.push_back(&f);
    Tensor5<T> out = concat_channels(parts);
    if (!cache) features_.clear();
    return out;
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    if (features_.empty()) throw ValidationError("DenseBlock3d: backward without forward");
    std::vector<int> sizes;
    sizes.push_back(in_c_);
    for (int l = 0; l < num_layers_; ++l) sizes.push_back(growth_rate_);
    std::vector<Tensor5<T>> grads = split_channels(grad_out, sizes);

    for (int l = num_layers_ - 1; l >= 0; --l) {
      Tensor5<T> g_unit = units_[l].backward(grads[l + 1]);
      if (per_layer_bottleneck_) g_unit = unit_squeezes_[l].backward(g_unit);
      std::vector<int> in_sizes;
      in_sizes.push_back(in_c_);
      for (int j = 0; j < l; ++j) in_sizes.push_back(growth_rate_);
      std::vector<Tensor5<T>> pieces = split_channels(g_unit, in_sizes);
      for (int j = 0; j <= l; ++j) {
        for (std::size_t i = 0; i < pieces[j].size(); ++i) {
          grads[j].values()[i] += pieces[j].values()[i];
        }
      }
    }
    return bottleneck_.backward(grads[0]);
  }

  void zero_grad() {
    bottleneck_.zero_grad();
    for (auto& u : units_) u.zero_grad();
    for (auto& s : unit_squeezes_) s.zero_grad();
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    bottleneck_.collect_params(prefix + ".bottleneck", out);
    for (int l = 0; l < num_layers_; ++l) {
      if (per_layer_bottleneck_) {
        unit_squeezes_[l].collect_params(prefix + ".unit" + std::to_string(l) + ".squeeze",
                                         out);
      }
      units_[l].collect_params(prefix + ".unit" + std::to_string(l), out);
    }
  }

  void collect_state(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    bottleneck_.collect_state(prefix + ".bottleneck", out);
    for (int l = 0; l < num_layers_; ++l) {
      if (per_layer_bottleneck_) {
        unit_squeezes_[l].collect_state(prefix + ".unit" + std::to_string(l) + ".squeeze",
                                        out);
      }
      units_[l].collect_state(prefix + ".unit" + std::to_string(l), out);
    }
  }

  void init(Rng& rng) {
    bottleneck_.init(rng);
    for (auto& s : unit_squeezes_) s.init(rng);
    for (auto& u : units_) u.init(rng);
  }

private:
  int in_c_ = 0, num_layers_ = 0, growth_rate_ = 0;
  bool per_layer_bottleneck_ = false;
  BnReluConv<T> bottleneck_;
  std::vector<BnReluConv<T>> unit_squeezes_;
  std::vector<BnReluConv<T>> units_;
  std::vector<Tensor5<T>> features_;
};

// Between-block resize: 1x1x1 composite compressing to floor(theta * C), then
// 2x2x2 average pool, stride 2, ceil mode (25 -> 13 and 13 -> 7 need the
// partial edge window).
template <typename T>
class TransitionLayer3d {
public:
  TransitionLayer3d() = default;

  TransitionLayer3d(int in_channels, double compression)
      : in_c_(in_channels),
        out_c_(static_cast<int>(std::floor(compression * in_channels))),
        conv_(in_channels, out_c_, {1, 1, 1}, {0, 0, 0}),
        pool_({2, 2, 2}, {2, 2, 2}, {0, 0, 0}, /*ceil_mode=*/true) {
    if (out_c_ < 1) throw ValidationError("TransitionLayer3d: compression yields 0 channels");
  }

  int out_channels() const { return out_c_; }
  const AvgPool3d<T>& pool() const { return pool_; }

  Tensor5<T> forward(const Tensor5<T>& x, bool train, bool cache = true) {
    return pool_.forward(conv_.forward(x, train, cache), cache);
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    return conv_.backward(pool_.backward(grad_out));
  }

  void zero_grad() { conv_.zero_grad(); }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    conv_.collect_params(prefix, out);
  }

  void collect_state(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    conv_.collect_state(prefix, out);
  }

  void init(Rng& rng) { conv_.init(rng); }

private:
  int in_c_ = 0, out_c_ = 0;
  BnReluConv<T> conv_;
  AvgPool3d<T> pool_;
};

struct LayerShape {
  std::string name;
  int channels;
  int depth;
  int height;
  int width;
};

// The full classifier: stem conv -> stem pool -> [dense block, transition]
// x (B-1) -> dense block -> global average pool -> fully-connected -> softmax.
template <typename T>
class StDenseNet {
public:
  StDenseNet() : StDenseNet(StDenseNetConfig{}) {}

  explicit StDenseNet(const StDenseNetConfig& config) : config_(config) {
    config_.validate();
    std::array<int, 3> stem_pad = {(config_.stem_kernel[0] - 1) / 2,
                                   (config_.stem_kernel[1] - 1) / 2,
                                   (config_.stem_kernel[2] - 1) / 2};
    stem_conv_ = Conv3d<T>(config_.input_channels, config_.stem_channels, config_.stem_kernel,
                           config_.stem_stride, stem_pad, /*has_bias=*/true);
    stem_pool_ = AvgPool3d<T>(config_.stem_pool_kernel, config_.stem_pool_stride,
                              config_.stem_pool_padding, /*ceil_mode=*/false);

    auto [d, h, w] = stem_conv_.output_dims(config_.input_depth, config_.input_height,
                                            config_.input_width);
    auto [pd, ph, pw] = stem_pool_.output_dims(d, h, w);
    int channels = config_.stem_channels;
    int cur_d = pd, cur_h = ph, cur_w = pw;

    for (int b = 0; b < config_.num_blocks; ++b) {
      blocks_.emplace_back(channels, config_.layers_per_block, config_.growth_rate,
                           config_.per_layer_bottleneck);
      channels = blocks_.back().out_channels();
      if (b + 1 < config_.num_blocks) {
        transitions_.emplace_back(channels, config_.compression);
        channels = transitions_.back().out_channels();
        auto [td, th, tw] = transitions_.back().pool().output_dims(cur_d, cur_h, cur_w);
        cur_d = td;
        cur_h = th;
        cur_w = tw;
      }
    }
    feature_channels_ = channels;
    global_pool_ = AvgPool3d<T>({cur_d, cur_h, cur_w}, {1, 1, 1}, {0, 0, 0}, false);
    fc_ = Linear<T>(feature_channels_, config_.num_classes);
  }

  const StDenseNetConfig& config() const { return config_; }
  int feature_channels() const { return feature_channels_; }

  void init(std::uint64_t seed) {
    Rng rng(seed);
    stem_conv_.init(rng);
    for (auto& b : blocks_) b.init(rng);
    for (auto& t : transitions_) t.init(rng);
    fc_.init(rng);
  }

  // Probability rows (N, num_classes, 1, 1, 1); each row sums to 1.
  Tensor5<T> forward(const Tensor5<T>& x, bool train, bool cache = true) {
    if (x.c() != config_.input_channels || x.d() != config_.input_depth ||
        x.h() != config_.input_height || x.w() != config_.input_width) {
      throw ValidationError("StDenseNet: input shape mismatch");
    }
    Tensor5<T> t = stem_conv_.forward(x, cache);
    t = stem_pool_.forward(t, cache);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      t = blocks_[b].forward(t, train, cache);
      if (b < transitions_.size()) t = transitions_[b].forward(t, train, cache);
    }
    t = global_pool_.forward(t, cache);
    t = fc_.forward(t, cache);
    has_forward_ = cache;
    return softmax_rows(t);
  }

  // Backpropagates d(loss)/d(logits) through the whole net, accumulating
  // parameter gradients; returns the input gradient.
  Tensor5<T> backward(const Tensor5<T>& grad_logits) {
    if (!has_forward_) throw ValidationError("StDenseNet: backward without forward");
    Tensor5<T> g = fc_.backward(grad_logits);
    g = global_pool_.backward(g);
    for (int b = static_cast<int>(blocks_.size()) - 1; b >= 0; --b) {
      if (static_cast<std::size_t>(b) < transitions_.size()) {
        g = transitions_[b].backward(g);
      }
      g = blocks_[b].backward(g);
    }
    g = stem_pool_.backward(g);
    return stem_conv_.backward(g);
  }

  void zero_grad() {
    stem_conv_.zero_grad();
    for (auto& b : blocks_) b.zero_grad();
    for (auto& t : transitions_) t.zero_grad();
    fc_.zero_grad();
  }

  std::vector<ParamRef<T>> parameters() {
    std::vector<ParamRef<T>> out;
    stem_conv_.collect_params("stem", out);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      blocks_[b].collect_params("block" + std::to_string(b + 1), out);
      if (b < transitions_.size()) {
        transitions_[b].collect_params("transition" + std::to_string(b + 1), out);
      }
    }
    fc_.collect_params("fc", out);
    return out;
  }

  // Parameters plus batch-norm running statistics: everything the weights
  // container persists, in a fixed order.
  std::vector<ParamRef<T>> named_tensors() {
    std::vector<ParamRef<T>> out = parameters();
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      blocks_[b].collect_state("block" + std::to_string(b + 1), out);
      if (b < transitions_.size()) {
        transitions_[b].collect_state("transition" + std::to_string(b + 1), out);
      }
    }
    return out;
  }

  // Analytic (C, D, H, W) schedule at every named stage, for the
  // architecture-fidelity check.
  std::vector<LayerShape> shape_trace() const {
    std::vector<LayerShape> trace;
    trace.push_back({"input", config_.input_channels, config_.input_depth,
                     config_.input_height, config_.input_width});
    auto [d, h, w] = stem_conv_.output_dims(config_.input_depth, config_.input_height,
                                            config_.input_width);
    trace.push_back({"stem_conv", config_.stem_channels, d, h, w});
    auto [pd, ph, pw] = stem_pool_.output_dims(d, h, w);
    trace.push_back({"stem_pool", config_.stem_channels, pd, ph, pw});
    int cd = pd, ch = ph, cw = pw;
    int channels = config_.stem_channels;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      channels = blocks_[b].out_channels();
      trace.push_back({"dense_block" + std::to_string(b + 1), channels, cd, ch, cw});
      if (b < transitions_.size()) {
        channels = transitions_[b].out_channels();
        auto [td, th, tw] = transitions_[b].pool().output_dims(cd, ch, cw);
        cd = td;
        ch = th;
        cw = tw;
        trace.push_back({"transition" + std::to_string(b + 1), channels, cd, ch, cw});
      }
    }
    trace.push_back({"global_pool", channels, 1, 1, 1});
    trace.push_back({"fc", config_.num_classes, 1, 1, 1});
    return trace;
  }

private:
  StDenseNetConfig config_;
  Conv3d<T> stem_conv_;
  AvgPool3d<T> stem_pool_;
  std::vector<DenseBlock3d<T>> blocks_;
  std::vector<TransitionLayer3d<T>> transitions_;
  AvgPool3d<T> global_pool_;
  Linear<T> fc_;
  int feature_channels_ = 0;
  bool has_forward_ = false;
};

}  // namespace pedintent::nn
