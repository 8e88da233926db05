#pragma once

// Building blocks with explicit forward/backward passes. Each layer caches
// what its backward pass needs from the most recent forward call, so a
// layer instance serves one forward/backward pair at a time.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "hipseg/network/tensor.hpp"

namespace hipseg::nn {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T, typename Rng>
void he_normal(std::vector<T>& w, int fan_in, Rng& rng, double gain = 2.0) {
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
  for (auto& v : w) v = static_cast<T>(dist(rng));
}

// 3x3 convolution, stride 1, zero padding 1, no bias.
template <typename T>
class Conv3x3 {
 public:
  Conv3x3() = default;
  Conv3x3(int in, int out, std::string name) : in_(in), out_(out) {
    weight_.name = std::move(name);
    weight_.resize(static_cast<std::size_t>(out) * in * 9);
  }

  template <typename Rng>
  void init(Rng& rng) { he_normal(weight_.value, in_ * 9, rng); }

  FeatureMap<T> forward(const FeatureMap<T>& x) {
    input_ = x;
    FeatureMap<T> y(out_, x.batch, x.height, x.width);
    auto ym = y.matrix();
    for_each_chunk(x, [&](int b0, int nb, Eigen::Index c0, Eigen::Index cols) {
      im2col(x, b0, nb);
      ym.middleCols(c0, cols).noalias() = weights() * ConstMatrixMap<T>(col_.data(), in_ * 9, cols);
    });
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) {
    FeatureMap<T> dx(in_, input_.batch, input_.height, input_.width);
    MatrixMap<T> dw(weight_.grad.data(), out_, in_ * 9);
    const auto dym = dy.matrix();
    for_each_chunk(input_, [&](int b0, int nb, Eigen::Index c0, Eigen::Index cols) {
      im2col(input_, b0, nb);
      const ConstMatrixMap<T> col(col_.data(), in_ * 9, cols);
      dw.noalias() += dym.middleCols(c0, cols) * col.transpose();
      MatrixMap<T>(col_.data(), in_ * 9, cols).noalias() = weights().transpose() * dym.middleCols(c0, cols);
      col2im(dx, b0, nb);
    });
    return dx;
  }

  Param<T>& weight() noexcept { return weight_; }
  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }

 private:
  ConstMatrixMap<T> weights() const { return ConstMatrixMap<T>(weight_.value.data(), out_, in_ * 9); }

  // Images are processed in groups small enough to keep the column buffer in cache.
  template <typename F>
  void for_each_chunk(const FeatureMap<T>& x, F&& f) {
    const std::size_t plane = x.plane();
    const std::size_t budget = (std::size_t{1} << 19) / (static_cast<std::size_t>(in_) * 9);
    const int per = static_cast<int>(std::max<std::size_t>(1, budget / plane));
    for (int b0 = 0; b0 < x.batch; b0 += per) {
      const int nb = std::min(per, x.batch - b0);
      const auto cols = static_cast<Eigen::Index>(static_cast<std::size_t>(nb) * plane);
      col_.resize(static_cast<std::size_t>(in_) * 9 * static_cast<std::size_t>(cols));
      f(b0, nb, static_cast<Eigen::Index>(static_cast<std::size_t>(b0) * plane), cols);
    }
  }

  void im2col(const FeatureMap<T>& x, int b0, int nb) {
    const int H = x.height, W = x.width;
    const std::size_t plane = x.plane();
    const std::size_t m = plane * static_cast<std::size_t>(nb);
    for (int c = 0; c < in_; ++c)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          T* dst_row = col_.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * m;
          for (int b = 0; b < nb; ++b) {
            const T* src_plane = x.row(c) + (b0 + b) * plane;
            T* dst_plane = dst_row + b * plane;
            for (int y = 0; y < H; ++y) {
              T* dst = dst_plane + static_cast<std::size_t>(y) * W;
              const int yy = y + ky - 1;
              if (yy < 0 || yy >= H) {
                std::fill(dst, dst + W, T(0));
                continue;
              }
              const T* src = src_plane + static_cast<std::size_t>(yy) * W;
              if (kx == 1) {
                std::copy(src, src + W, dst);
              } else if (kx == 0) {
                dst[0] = T(0);
                std::copy(src, src + W - 1, dst + 1);
              } else {
                std::copy(src + 1, src + W, dst);
                dst[W - 1] = T(0);
              }
            }
          }
        }
  }

  void col2im(FeatureMap<T>& dx, int b0, int nb) const {
    const int H = dx.height, W = dx.width;
    const std::size_t plane = dx.plane();
    const std::size_t m = plane * static_cast<std::size_t>(nb);
    for (int c = 0; c < in_; ++c)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const T* src_row = col_.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * m;
          for (int b = 0; b < nb; ++b) {
            T* dst_plane = dx.row(c) + (b0 + b) * plane;
            const T* src_plane = src_row + b * plane;
            for (int y = 0; y < H; ++y) {
              const int yy = y + ky - 1;
              if (yy < 0 || yy >= H) continue;
              const T* src = src_plane + static_cast<std::size_t>(y) * W;
              T* dst = dst_plane + static_cast<std::size_t>(yy) * W;
              if (kx == 1) {
                for (int q = 0; q < W; ++q) dst[q] += src[q];
              } else if (kx == 0) {
                for (int q = 1; q < W; ++q) dst[q - 1] += src[q];
              } else {
                for (int q = 0; q + 1 < W; ++q) dst[q + 1] += src[q];
              }
            }
          }
        }
  }

  int in_ = 0, out_ = 0;
  Param<T> weight_;
  FeatureMap<T> input_;
  std::vector<T> col_;
};

// 1x1 convolution, no bias.
template <typename T>
class Conv1x1 {
 public:
  Conv1x1() = default;
  Conv1x1(int in, int out, std::string name) : in_(in), out_(out) {
    weight_.name = std::move(name);
    weight_.resize(static_cast<std::size_t>(out) * in);
  }

  template <typename Rng>
  void init(Rng& rng, double gain = 2.0) { he_normal(weight_.value, in_, rng, gain); }

  FeatureMap<T> forward(const FeatureMap<T>& x) {
    input_ = x;
    FeatureMap<T> y(out_, x.batch, x.height, x.width);
    y.matrix().noalias() = weights() * x.matrix();
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) {
    MatrixMap<T>(weight_.grad.data(), out_, in_).noalias() += dy.matrix() * input_.matrix().transpose();
    FeatureMap<T> dx(in_, dy.batch, dy.height, dy.width);
    dx.matrix().noalias() = weights().transpose() * dy.matrix();
    return dx;
  }

  Param<T>& weight() noexcept { return weight_; }

 private:
  ConstMatrixMap<T> weights() const { return ConstMatrixMap<T>(weight_.value.data(), out_, in_); }

  int in_ = 0, out_ = 0;
  Param<T> weight_;
  FeatureMap<T> input_;
};

// 2x2 transposed convolution with stride 2 (doubles height and width), no bias.
template <typename T>
class UpConv2x2 {
 public:
  UpConv2x2() = default;
  UpConv2x2(int in, int out, std::string name) : in_(in), out_(out) {
    weight_.name = std::move(name);
    weight_.resize(static_cast<std::size_t>(out) * 4 * in);
  }

  template <typename Rng>
  void init(Rng& rng) { he_normal(weight_.value, in_, rng); }

  FeatureMap<T> forward(const FeatureMap<T>& x) {
    input_ = x;
    const auto m = static_cast<Eigen::Index>(x.columns());
    RowMatrix<T> taps = weights() * x.matrix();  // (out*4) x (N*h*w)
    FeatureMap<T> y(out_, x.batch, x.height * 2, x.width * 2);
    const int h = x.height, w = x.width, W = 2 * w;
    for (int co = 0; co < out_; ++co)
      for (int t = 0; t < 4; ++t) {
        const int dy = t / 2, dx = t % 2;
        const T* src = taps.data() + (static_cast<std::size_t>(co) * 4 + t) * m;
        for (int b = 0; b < x.batch; ++b) {
          T* dst = y.row(co) + static_cast<std::size_t>(b) * y.plane();
          const T* s = src + static_cast<std::size_t>(b) * h * w;
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) dst[(2 * i + dy) * W + 2 * j + dx] = s[i * w + j];
        }
      }
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy_full) {
    const int h = input_.height, w = input_.width, W = 2 * w;
    const auto m = static_cast<Eigen::Index>(input_.columns());
    RowMatrix<T> dtaps(out_ * 4, m);
    for (int co = 0; co < out_; ++co)
      for (int t = 0; t < 4; ++t) {
        const int dy = t / 2, dx = t % 2;
        T* dst = dtaps.data() + (static_cast<std::size_t>(co) * 4 + t) * m;
        for (int b = 0; b < input_.batch; ++b) {
          const T* src = dy_full.row(co) + static_cast<std::size_t>(b) * dy_full.plane();
          T* d = dst + static_cast<std::size_t>(b) * h * w;
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) d[i * w + j] = src[(2 * i + dy) * W + 2 * j + dx];
        }
      }
    MatrixMap<T>(weight_.grad.data(), out_ * 4, in_).noalias() += dtaps * input_.matrix().transpose();
    FeatureMap<T> dx(in_, input_.batch, h, w);
    dx.matrix().noalias() = weights().transpose() * dtaps;
    return dx;
  }

  Param<T>& weight() noexcept { return weight_; }

 private:
  ConstMatrixMap<T> weights() const { return ConstMatrixMap<T>(weight_.value.data(), out_ * 4, in_); }

  int in_ = 0, out_ = 0;
  Param<T> weight_;
  FeatureMap<T> input_;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(int channels, const std::string& name)
      : channels_(channels), running_mean_(static_cast<std::size_t>(channels), T(0)),
        running_var_(static_cast<std::size_t>(channels), T(1)) {
    gamma_.name = name + ".gamma";
    beta_.name = name + ".beta";
    gamma_.resize(static_cast<std::size_t>(channels));
    beta_.resize(static_cast<std::size_t>(channels));
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  }

  FeatureMap<T> forward(const FeatureMap<T>& x, Mode mode) {
    FeatureMap<T> y(x.channels, x.batch, x.height, x.width);
    const std::size_t m = x.columns();
    if (mode == Mode::train) {
      xhat_.resize(x.data.size());
      inv_std_.resize(static_cast<std::size_t>(channels_));
    }
    for (int c = 0; c < channels_; ++c) {
      const T* in = x.row(c);
      T* out = y.row(c);
      double mean, var;
      if (mode == Mode::train) {
        // Plain loops: Eigen reductions over Maps peel by address alignment, so
        // the summation order (and the last bits) would depend on the allocator.
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) sum += in[i];
        mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) ss += (in[i] - mean) * (in[i] - mean);
        var = ss / static_cast<double>(m);
        const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
        auto& rm = running_mean_[static_cast<std::size_t>(c)];
        auto& rv = running_var_[static_cast<std::size_t>(c)];
        rm = static_cast<T>((1.0 - kBatchNormMomentum) * rm + kBatchNormMomentum * mean);
        rv = static_cast<T>((1.0 - kBatchNormMomentum) * rv + kBatchNormMomentum * unbiased);
      } else {
        mean = running_mean_[static_cast<std::size_t>(c)];
        var = running_var_[static_cast<std::size_t>(c)];
      }
      const T inv = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEpsilon));
      const T g = gamma_.value[static_cast<std::size_t>(c)];
      const T b = beta_.value[static_cast<std::size_t>(c)];
      const T mu = static_cast<T>(mean);
      if (mode == Mode::train) {
        inv_std_[static_cast<std::size_t>(c)] = inv;
        T* xh = xhat_.data() + static_cast<std::size_t>(c) * m;
        for (std::size_t i = 0; i < m; ++i) {
          xh[i] = (in[i] - mu) * inv;
          out[i] = g * xh[i] + b;
        }
      } else {
        const T scale = g * inv;
        const T shift = b - mu * scale;
        for (std::size_t i = 0; i < m; ++i) out[i] = in[i] * scale + shift;
      }
    }
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) {
    FeatureMap<T> dx(dy.channels, dy.batch, dy.height, dy.width);
    const std::size_t m = dy.columns();
    const T inv_m = T(1) / static_cast<T>(m);
    for (int c = 0; c < channels_; ++c) {
      const T* d = dy.row(c);
      const T* xh = xhat_.data() + static_cast<std::size_t>(c) * m;
      double sb = 0.0, sg = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sb += d[i];
        sg += static_cast<double>(d[i]) * xh[i];
      }
      const T dbeta = static_cast<T>(sb);
      const T dgamma = static_cast<T>(sg);
      beta_.grad[static_cast<std::size_t>(c)] += dbeta;
      gamma_.grad[static_cast<std::size_t>(c)] += dgamma;
      const T k = gamma_.value[static_cast<std::size_t>(c)] * inv_std_[static_cast<std::size_t>(c)] * inv_m;
      T* out = dx.row(c);
      const T mT = static_cast<T>(m);
      for (std::size_t i = 0; i < m; ++i) out[i] = k * (mT * d[i] - dbeta - xh[i] * dgamma);
    }
    return dx;
  }

  Param<T>& gamma() noexcept { return gamma_; }
  Param<T>& beta() noexcept { return beta_; }
  std::vector<T>& running_mean() noexcept { return running_mean_; }
  std::vector<T>& running_var() noexcept { return running_var_; }

 private:
  int channels_ = 0;
  Param<T> gamma_, beta_;
  std::vector<T> running_mean_, running_var_;
  std::vector<T> xhat_, inv_std_;
};

template <typename T>
class Relu {
 public:
  FeatureMap<T> forward(FeatureMap<T> x) {
    for (auto& v : x.data) v = v > T(0) ? v : T(0);
    output_ = x;
    return x;
  }
  FeatureMap<T> backward(FeatureMap<T> dy) const {
    for (std::size_t i = 0; i < dy.data.size(); ++i) {
      if (!(output_.data[i] > T(0))) dy.data[i] = T(0);
    }
    return dy;
  }

 private:
  FeatureMap<T> output_;
};

template <typename T>
class MaxPool2 {
 public:
  FeatureMap<T> forward(const FeatureMap<T>& x) {
    in_h_ = x.height;
    in_w_ = x.width;
    const int h = x.height / 2, w = x.width / 2;
    FeatureMap<T> y(x.channels, x.batch, h, w);
    argmax_.resize(y.data.size());
    std::size_t o = 0;
    for (int c = 0; c < x.channels; ++c)
      for (int b = 0; b < x.batch; ++b) {
        const T* src = x.row(c) + static_cast<std::size_t>(b) * x.plane();
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j, ++o) {
            const int base = (2 * i) * x.width + 2 * j;
            const int cand[4] = {base, base + 1, base + x.width, base + x.width + 1};
            int best = cand[0];
            for (int k = 1; k < 4; ++k)
              if (src[cand[k]] > src[best]) best = cand[k];
            y.data[o] = src[best];
            argmax_[o] = static_cast<std::uint32_t>(best);
          }
      }
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) const {
    FeatureMap<T> dx(dy.channels, dy.batch, in_h_, in_w_);
    const std::size_t in_plane = dx.plane();
    std::size_t o = 0;
    for (int c = 0; c < dy.channels; ++c)
      for (int b = 0; b < dy.batch; ++b) {
        T* dst = dx.row(c) + static_cast<std::size_t>(b) * in_plane;
        for (std::size_t k = 0; k < dy.plane(); ++k, ++o) dst[argmax_[o]] += dy.data[o];
      }
    return dx;
  }

 private:
  int in_h_ = 0, in_w_ = 0;
  std::vector<std::uint32_t> argmax_;
};

// relu(bn(conv(relu(bn(conv(x))))) + conv1x1(x))
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(int in, int out, const std::string& name)
      : conv1_(in, out, name + ".conv1"), bn1_(out, name + ".bn1"), conv2_(out, out, name + ".conv2"),
        bn2_(out, name + ".bn2"), shortcut_(in, out, name + ".shortcut") {}

  template <typename Rng>
  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    shortcut_.init(rng, 1.0);
  }

  FeatureMap<T> forward(const FeatureMap<T>& x, Mode mode) {
    FeatureMap<T> main = relu1_.forward(bn1_.forward(conv1_.forward(x), mode));
    main = bn2_.forward(conv2_.forward(main), mode);
    const FeatureMap<T> skip = shortcut_.forward(x);
    for (std::size_t i = 0; i < main.data.size(); ++i) main.data[i] += skip.data[i];
    return out_.forward(std::move(main));
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) {
    const FeatureMap<T> d = out_.backward(dy);
    FeatureMap<T> dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d)))));
    const FeatureMap<T> dskip = shortcut_.backward(d);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dskip.data[i];
    return dx;
  }

  std::vector<Param<T>*> parameters() {
    return {&conv1_.weight(), &bn1_.gamma(), &bn1_.beta(), &conv2_.weight(),
            &bn2_.gamma(),    &bn2_.beta(),  &shortcut_.weight()};
  }
  std::vector<std::vector<T>*> buffers() {
    return {&bn1_.running_mean(), &bn1_.running_var(), &bn2_.running_mean(), &bn2_.running_var()};
  }

 private:
  Conv3x3<T> conv1_;
  BatchNorm<T> bn1_;
  Relu<T> relu1_;
  Conv3x3<T> conv2_;
  BatchNorm<T> bn2_;
  Conv1x1<T> shortcut_;
  Relu<T> out_;
};

}  // namespace hipseg::nn
