#pragma once

// 2D encoder-decoder with residual double-convolution blocks.
//
// Level widths follow the VGG-11 channel progression (1, 2, 4, 8, 8, ... times
// base_width). The encoder applies a block then 2x2 max pooling at each of
// `depth` levels, a bottleneck block sits at the bottom, and every decoder
// level upsamples with a 2x2 transposed convolution, concatenates the skip
// connection and applies another block. A 1x1 convolution produces the head
// logits: one channel for a sigmoid head, two for a softmax head.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hipseg/common/random.hpp"
#include "hipseg/network/layers.hpp"

namespace hipseg::nn {

enum class Head { sigmoid, softmax2 };

inline std::string_view name_of(Head h) noexcept { return h == Head::sigmoid ? "sigmoid-1ch" : "softmax-2ch"; }

inline Head parse_head(std::string_view s) {
  if (s == "sigmoid-1ch" || s == "sigmoid") return Head::sigmoid;
  if (s == "softmax-2ch" || s == "softmax") return Head::softmax2;
  throw std::invalid_argument("unknown head '" + std::string(s) + "'");
}

struct NetworkConfig {
  int depth = 4;
  int base_width = 8;
  Head head = Head::softmax2;
  int input_channels = 3;

  int output_channels() const noexcept { return head == Head::sigmoid ? 1 : 2; }
  int divisor() const noexcept { return 1 << depth; }
  int width(int level) const noexcept { return base_width * std::min(1 << level, 8); }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

inline void require_valid(const NetworkConfig& c) {
  if (c.depth < 1 || c.depth > 8) throw std::invalid_argument("network depth must be in [1, 8]");
  if (c.base_width < 1) throw std::invalid_argument("network base_width must be >= 1");
  if (c.input_channels < 1) throw std::invalid_argument("network input_channels must be >= 1");
}

// Smallest extent >= n divisible by `divisor`.
inline int compatible_extent(int n, int divisor) { return ((n + divisor - 1) / divisor) * divisor; }

// Parameters and batch-norm statistics, in registration order.
template <typename T>
struct NetworkState {
  std::vector<std::vector<T>> params;
  std::vector<std::vector<T>> buffers;
  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

template <typename T>
class Network {
 public:
  Network() : Network(NetworkConfig{}, 0) {}

  Network(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
    require_valid(config_);
    const int depth = config_.depth;
    int in = config_.input_channels;
    for (int l = 0; l <= depth; ++l) {
      encoder_.emplace_back(in, config_.width(l), "enc" + std::to_string(l));
      in = config_.width(l);
    }
    pools_.resize(static_cast<std::size_t>(depth));
    for (int l = 0; l < depth; ++l) {
      ups_.emplace_back(config_.width(l + 1), config_.width(l), "up" + std::to_string(l));
      decoder_.emplace_back(2 * config_.width(l), config_.width(l), "dec" + std::to_string(l));
    }
    head_ = Conv1x1<T>(config_.width(0), config_.output_channels(), "head");

    Rng rng = make_rng(seed, {0x6e6574});
    for (auto& b : encoder_) b.init(rng);
    for (int l = 0; l < depth; ++l) {
      ups_[static_cast<std::size_t>(l)].init(rng);
      decoder_[static_cast<std::size_t>(l)].init(rng);
    }
    head_.init(rng, 1.0);
  }

  const NetworkConfig& config() const noexcept { return config_; }

  void require_compatible(int height, int width) const {
    const int div = config_.divisor();
    if (height % div != 0 || width % div != 0) {
      throw std::invalid_argument("input " + std::to_string(height) + "x" + std::to_string(width) +
                                  " is not divisible by 2^depth = " + std::to_string(div));
    }
  }

  // Raw head logits, C x (N*H*W).
  FeatureMap<T> forward_logits(const Tensor4<T>& input, Mode mode) {
    if (input.c != config_.input_channels) {
      throw std::invalid_argument("expected " + std::to_string(config_.input_channels) + " input channels, got " +
                                  std::to_string(input.c));
    }
    require_compatible(input.h, input.w);
    const auto depth = static_cast<std::size_t>(config_.depth);
    skips_.resize(depth);
    FeatureMap<T> x = to_feature_map(input);
    for (std::size_t l = 0; l < depth; ++l) {
      skips_[l] = encoder_[l].forward(x, mode);
      x = pools_[l].forward(skips_[l]);
    }
    x = encoder_[depth].forward(x, mode);
    for (std::size_t l = depth; l-- > 0;) {
      const FeatureMap<T> up = ups_[l].forward(x);
      x = decoder_[l].forward(concat(up, skips_[l]), mode);
    }
    skips_.clear();
    return head_.forward(x);
  }

  // Head activations in N x C x H x W: sigmoid in (0,1), or a per-pixel softmax.
  Tensor4<T> forward(const Tensor4<T>& input, Mode mode = Mode::infer) {
    return to_tensor(activate(forward_logits(input, mode), config_.head));
  }

  // Accumulates parameter gradients from dLoss/dlogits of the latest forward pass.
  void backward(const FeatureMap<T>& dlogits) {
    const auto depth = static_cast<std::size_t>(config_.depth);
    FeatureMap<T> d = head_.backward(dlogits);
    std::vector<FeatureMap<T>> dskip(depth);
    for (std::size_t l = 0; l < depth; ++l) {
      const FeatureMap<T> dcat = decoder_[l].backward(d);
      FeatureMap<T> dup;
      split(dcat, config_.width(static_cast<int>(l)), dup, dskip[l]);
      d = ups_[l].backward(dup);
    }
    d = encoder_[depth].backward(d);
    for (std::size_t l = depth; l-- > 0;) {
      FeatureMap<T> total = pools_[l].backward(d);
      for (std::size_t i = 0; i < total.data.size(); ++i) total.data[i] += dskip[l].data[i];
      d = encoder_[l].backward(total);
    }
  }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    auto add = [&](std::vector<Param<T>*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
    for (auto& b : encoder_) add(b.parameters());
    for (std::size_t l = 0; l < ups_.size(); ++l) {
      out.push_back(&ups_[l].weight());
      add(decoder_[l].parameters());
    }
    out.push_back(&head_.weight());
    return out;
  }

  std::vector<std::vector<T>*> buffers() {
    std::vector<std::vector<T>*> out;
    auto add = [&](std::vector<std::vector<T>*> bs) { out.insert(out.end(), bs.begin(), bs.end()); };
    for (auto& b : encoder_) add(b.buffers());
    for (auto& b : decoder_) add(b.buffers());
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
  }

  NetworkState<T> state() {
    NetworkState<T> s;
    for (auto* p : parameters()) s.params.push_back(p->value);
    for (auto* b : buffers()) s.buffers.push_back(*b);
    return s;
  }

  void load_state(const NetworkState<T>& s) {
    auto ps = parameters();
    auto bs = buffers();
    if (s.params.size() != ps.size() || s.buffers.size() != bs.size()) {
      throw std::invalid_argument("network state does not match architecture");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (s.params[i].size() != ps[i]->value.size()) throw std::invalid_argument("parameter size mismatch in " + ps[i]->name);
      ps[i]->value = s.params[i];
    }
    for (std::size_t i = 0; i < bs.size(); ++i) {
      if (s.buffers[i].size() != bs[i]->size()) throw std::invalid_argument("buffer size mismatch");
      *bs[i] = s.buffers[i];
    }
  }

  Param<T>& head_weight() noexcept { return head_.weight(); }

  static FeatureMap<T> activate(FeatureMap<T> logits, Head head) {
    if (head == Head::sigmoid) {
      for (auto& v : logits.data) v = T(1) / (T(1) + std::exp(-v));
      return logits;
    }
    T* z0 = logits.row(0);
    T* z1 = logits.row(1);
    for (std::size_t i = 0; i < logits.columns(); ++i) {
      const T m = std::max(z0[i], z1[i]);
      const T e0 = std::exp(z0[i] - m), e1 = std::exp(z1[i] - m);
      const T s = e0 + e1;
      z0[i] = e0 / s;
      z1[i] = e1 / s;
    }
    return logits;
  }

 private:
  static FeatureMap<T> concat(const FeatureMap<T>& a, const FeatureMap<T>& b) {
    FeatureMap<T> out(a.channels + b.channels, a.batch, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
  }

  static void split(const FeatureMap<T>& in, int first_channels, FeatureMap<T>& first, FeatureMap<T>& second) {
    first = FeatureMap<T>(first_channels, in.batch, in.height, in.width);
    second = FeatureMap<T>(in.channels - first_channels, in.batch, in.height, in.width);
    const auto cut = static_cast<std::ptrdiff_t>(first.data.size());
    std::copy(in.data.begin(), in.data.begin() + cut, first.data.begin());
    std::copy(in.data.begin() + cut, in.data.end(), second.data.begin());
  }

  NetworkConfig config_;
  std::vector<ResidualBlock<T>> encoder_;
  std::vector<MaxPool2<T>> pools_;
  std::vector<UpConv2x2<T>> ups_;
  std::vector<ResidualBlock<T>> decoder_;
  Conv1x1<T> head_;
  std::vector<FeatureMap<T>> skips_;
};

}  // namespace hipseg::nn
