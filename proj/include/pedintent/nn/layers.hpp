#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/nn/tensor.hpp"
#include "pedintent/parallel.hpp"
#include "pedintent/rng.hpp"

namespace pedintent::nn {

// Named view onto one parameter tensor and its gradient accumulator (null
// for persisted-but-not-optimized state like running statistics).
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* value;
  std::vector<T>* grad;
  std::vector<int> dims;  // logical tensor shape
};

namespace detail {

inline int floor_div(int a, int b) {
  int q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

inline int ceil_div(int a, int b) { return floor_div(a + b - 1, b); }

inline int conv_out_dim(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

inline int pool_out_dim(int in, int kernel, int stride, int pad, bool ceil_mode) {
  int numer = in + 2 * pad - kernel;
  int out = (ceil_mode ? ceil_div(numer, stride) : floor_div(numer, stride)) + 1;
  // A ceil-mode window must still start inside the input or its left padding.
  if (ceil_mode && (out - 1) * stride >= in + pad) --out;
  return out;
}

}  // namespace detail

// 3D cross-correlation (no kernel flip). Weight layout
// [c_out][c_in][kd][kh][kw]; per-axis stride and padding (d, h, w).
template <typename T>
class Conv3d {
public:
  Conv3d() = default;

  Conv3d(int in_channels, int out_channels, std::array<int, 3> kernel,
         std::array<int, 3> stride, std::array<int, 3> padding, bool has_bias)
      : in_c_(in_channels),
        out_c_(out_channels),
        kernel_(kernel),
        stride_(stride),
        padding_(padding),
        has_bias_(has_bias) {
    if (in_channels < 1 || out_channels < 1) {
      throw ValidationError("Conv3d: channel counts must be >= 1");
    }
    for (int a = 0; a < 3; ++a) {
      if (kernel_[a] < 1 || stride_[a] < 1 || padding_[a] < 0) {
        throw ValidationError("Conv3d: kernel/stride must be >= 1 and padding >= 0");
      }
    }
    weight_.assign(static_cast<std::size_t>(out_c_) * in_c_ * kernel_[0] * kernel_[1] *
                       kernel_[2],
                   T(0));
    weight_grad_.assign(weight_.size(), T(0));
    if (has_bias_) {
      bias_.assign(out_c_, T(0));
      bias_grad_.assign(out_c_, T(0));
    }
  }

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }

  // He fan-in initialisation.
  void init(Rng& rng) {
    const double fan_in = static_cast<double>(in_c_) * kernel_[0] * kernel_[1] * kernel_[2];
    const double stddev = std::sqrt(2.0 / fan_in);
    for (T& w : weight_) w = static_cast<T>(rng.normal(0.0, stddev));
    for (T& b : bias_) b = T(0);
  }

  std::array<int, 3> output_dims(int d, int h, int w) const {
    std::array<int, 3> in = {d, h, w};
    std::array<int, 3> out;
    for (int a = 0; a < 3; ++a) {
      out[a] = detail::conv_out_dim(in[a], kernel_[a], stride_[a], padding_[a]);
      if (out[a] < 1) throw ValidationError("Conv3d: non-positive output dimension");
    }
    return out;
  }

  Tensor5<T> forward(const Tensor5<T>& x, bool cache = true) {
    if (x.c() != in_c_) throw ValidationError("Conv3d: input channel mismatch");
    auto [od_n, oh_n, ow_n] = output_dims(x.d(), x.h(), x.w());
    Tensor5<T> out(x.n(), out_c_, od_n, oh_n, ow_n);

    const int kd = kernel_[0], kh = kernel_[1], kw = kernel_[2];
    const int sd = stride_[0], sh = stride_[1], sw = stride_[2];
    const int pd = padding_[0], ph = padding_[1], pw = padding_[2];
    const std::size_t jobs = static_cast<std::size_t>(x.n()) * out_c_;
    const std::size_t work_per_job =
        static_cast<std::size_t>(od_n) * oh_n * ow_n * in_c_ * kd * kh * kw;

    parallel_for(jobs, std::max<std::size_t>(1, 200000 / std::max<std::size_t>(1, work_per_job)),
                 [&](std::size_t begin, std::size_t end) {
      for (std::size_t job = begin; job < end; ++job) {
        const int n = static_cast<int>(job) / out_c_;
        const int co = static_cast<int>(job) % out_c_;
        const T bias = has_bias_ ? bias_[co] : T(0);
        for (int od = 0; od < od_n; ++od) {
          for (int oh = 0; oh < oh_n; ++oh) {
            T* out_row = out.row(n, co, od, oh);
            for (int ow = 0; ow < ow_n; ++ow) out_row[ow] = bias;
          }
        }
        for (int ci = 0; ci < in_c_; ++ci) {
          for (int z = 0; z < kd; ++z) {
            const int od_lo = std::max(0, detail::ceil_div(pd - z, sd));
            const int od_hi = std::min(od_n - 1, detail::floor_div(x.d() - 1 + pd - z, sd));
            for (int y = 0; y < kh; ++y) {
              const int oh_lo = std::max(0, detail::ceil_div(ph - y, sh));
              const int oh_hi = std::min(oh_n - 1, detail::floor_div(x.h() - 1 + ph - y, sh));
              const T* wrow = weight_.data() +
                              ((((static_cast<std::size_t>(co) * in_c_ + ci) * kd + z) * kh + y) *
                               kw);
              for (int xk = 0; xk < kw; ++xk) {
                const T wv = wrow[xk];
                if (wv == T(0)) continue;
                const int ow_lo = std::max(0, detail::ceil_div(pw - xk, sw));
                const int ow_hi = std::min(ow_n - 1, detail::floor_div(x.w() - 1 + pw - xk, sw));
                for (int od = od_lo; od <= od_hi; ++od) {
                  const int id = od * sd - pd + z;
                  for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                    const int ih = oh * sh - ph + y;
                    const T* in_row = x.row(n, ci, id, ih);
                    T* out_row = out.row(n, co, od, oh);
                    const int base = -pw + xk;
                    for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                      out_row[ow] += wv * in_row[ow * sw + base];
                    }
                  }
                }
              }
            }
          }
        }
      }
    });

    if (cache) input_ = x;
    return out;
  }

  // Gradients for weights/bias accumulate; returns gradient w.r.t. input.
  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    if (input_.empty()) throw ValidationError("Conv3d: backward without cached forward");
    const Tensor5<T>& x = input_;
    auto [od_n, oh_n, ow_n] = output_dims(x.d(), x.h(), x.w());
    if (grad_out.n() != x.n() || grad_out.c() != out_c_ || grad_out.d() != od_n ||
        grad_out.h() != oh_n || grad_out.w() != ow_n) {
      throw ValidationError("Conv3d: gradient shape mismatch");
    }

    const int kd = kernel_[0], kh = kernel_[1], kw = kernel_[2];
    const int sd = stride_[0], sh = stride_[1], sw = stride_[2];
    const int pd = padding_[0], ph = padding_[1], pw = padding_[2];

    // Weight and bias gradients: one worker per output channel.
    parallel_for(static_cast<std::size_t>(out_c_), 1, [&](std::size_t begin, std::size_t end) {
      for (std::size_t co = begin; co < end; ++co) {
        if (has_bias_) {
          T acc = T(0);
          for (int n = 0; n < x.n(); ++n) {
            for (int od = 0; od < od_n; ++od) {
              for (int oh = 0; oh < oh_n; ++oh) {
                const T* g = grad_out.row(n, static_cast<int>(co), od, oh);
                for (int ow = 0; ow < ow_n; ++ow) acc += g[ow];
              }
            }
          }
          bias_grad_[co] += acc;
        }
        for (int ci = 0; ci < in_c_; ++ci) {
          for (int z = 0; z < kd; ++z) {
            const int od_lo = std::max(0, detail::ceil_div(pd - z, sd));
            const int od_hi = std::min(od_n - 1, detail::floor_div(x.d() - 1 + pd - z, sd));
            for (int y = 0; y < kh; ++y) {
              const int oh_lo = std::max(0, detail::ceil_div(ph - y, sh));
              const int oh_hi = std::min(oh_n - 1, detail::floor_div(x.h() - 1 + ph - y, sh));
              for (int xk = 0; xk < kw; ++xk) {
                const int ow_lo = std::max(0, detail::ceil_div(pw - xk, sw));
                const int ow_hi = std::min(ow_n - 1, detail::floor_div(x.w() - 1 + pw - xk, sw));
                T acc = T(0);
                for (int n = 0; n < x.n(); ++n) {
                  for (int od = od_lo; od <= od_hi; ++od) {
                    const int id = od * sd - pd + z;
                    for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                      const int ih = oh * sh - ph + y;
                      const T* g = grad_out.row(n, static_cast<int>(co), od, oh);
                      const T* in_row = x.row(n, ci, id, ih);
                      const int base = -pw + xk;
                      for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                        acc += g[ow] * in_row[ow * sw + base];
                      }
                    }
                  }
                }
                weight_grad_[(((static_cast<std::size_t>(co) * in_c_ + ci) * kd + z) * kh + y) *
                                 kw +
                             xk] += acc;
              }
            }
          }
        }
      }
    });

    // Input gradient: one worker per (n, ci) slab.
    Tensor5<T> grad_in(x.n(), in_c_, x.d(), x.h(), x.w());
    parallel_for(static_cast<std::size_t>(x.n()) * in_c_, 1,
                 [&](std::size_t begin, std::size_t end) {
      for (std::size_t job = begin; job < end; ++job) {
        const int n = static_cast<int>(job) / in_c_;
        const int ci = static_cast<int>(job) % in_c_;
        for (int co = 0; co < out_c_; ++co) {
          for (int z = 0; z < kd; ++z) {
            const int od_lo = std::max(0, detail::ceil_div(pd - z, sd));
            const int od_hi = std::min(od_n - 1, detail::floor_div(x.d() - 1 + pd - z, sd));
            for (int y = 0; y < kh; ++y) {
              const int oh_lo = std::max(0, detail::ceil_div(ph - y, sh));
              const int oh_hi = std::min(oh_n - 1, detail::floor_div(x.h() - 1 + ph - y, sh));
              const T* wrow = weight_.data() +
                              ((((static_cast<std::size_t>(co) * in_c_ + ci) * kd + z) * kh + y) *
                               kw);
              for (int xk = 0; xk < kw; ++xk) {
                const T wv = wrow[xk];
                if (wv == T(0)) continue;
                const int ow_lo = std::max(0, detail::ceil_div(pw - xk, sw));
                const int ow_hi = std::min(ow_n - 1, detail::floor_div(x.w() - 1 + pw - xk, sw));
                for (int od = od_lo; od <= od_hi; ++od) {
                  const int id = od * sd - pd + z;
                  for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                    const int ih = oh * sh - ph + y;
                    const T* g = grad_out.row(n, co, od, oh);
                    T* gi_row = grad_in.row(n, ci, id, ih);
                    const int base = -pw + xk;
                    for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                      gi_row[ow * sw + base] += wv * g[ow];
                    }
                  }
                }
              }
            }
          }
        }
      }
    });
    return grad_in;
  }

  void zero_grad() {
    std::fill(weight_grad_.begin(), weight_grad_.end(), T(0));
    std::fill(bias_grad_.begin(), bias_grad_.end(), T(0));
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight_, &weight_grad_,
                   {out_c_, in_c_, kernel_[0], kernel_[1], kernel_[2]}});
    if (has_bias_) out.push_back({prefix + ".bias", &bias_, &bias_grad_, {out_c_}});
  }

  std::vector<T>& weight() { return weight_; }
  const std::vector<T>& weight() const { return weight_; }
  std::vector<T>& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }

private:
  int in_c_ = 0, out_c_ = 0;
  std::array<int, 3> kernel_{1, 1, 1};
  std::array<int, 3> stride_{1, 1, 1};
  std::array<int, 3> padding_{0, 0, 0};
  bool has_bias_ = false;
  std::vector<T> weight_, bias_, weight_grad_, bias_grad_;
  Tensor5<T> input_;
};

// Average pooling; partial windows (from padding or ceil mode) average over
// their valid extent only.
template <typename T>
class AvgPool3d {
public:
  AvgPool3d() = default;

  AvgPool3d(std::array<int, 3> kernel, std::array<int, 3> stride, std::array<int, 3> padding,
            bool ceil_mode)
      : kernel_(kernel), stride_(stride), padding_(padding), ceil_mode_(ceil_mode) {
    for (int a = 0; a < 3; ++a) {
      if (kernel_[a] < 1 || stride_[a] < 1 || padding_[a] < 0) {
        throw ValidationError("AvgPool3d: kernel/stride must be >= 1 and padding >= 0");
      }
    }
  }

  std::array<int, 3> output_dims(int d, int h, int w) const {
    std::array<int, 3> in = {d, h, w};
    std::array<int, 3> out;
    for (int a = 0; a < 3; ++a) {
      out[a] = detail::pool_out_dim(in[a], kernel_[a], stride_[a], padding_[a], ceil_mode_);
      if (out[a] < 1) throw ValidationError("AvgPool3d: non-positive output dimension");
    }
    return out;
  }

  Tensor5<T> forward(const Tensor5<T>& x, bool cache = true) {
    auto [od_n, oh_n, ow_n] = output_dims(x.d(), x.h(), x.w());
    Tensor5<T> out(x.n(), x.c(), od_n, oh_n, ow_n);

    parallel_for(static_cast<std::size_t>(x.n()) * x.c(), 4,
                 [&](std::size_t begin, std::size_t end) {
      for (std::size_t job = begin; job < end; ++job) {
        const int n = static_cast<int>(job) / x.c();
        const int c = static_cast<int>(job) % x.c();
        for (int od = 0; od < od_n; ++od) {
          const auto [d0, d1] = window(od, 0, x.d());
          for (int oh = 0; oh < oh_n; ++oh) {
            const auto [h0, h1] = window(oh, 1, x.h());
            T* out_row = out.row(n, c, od, oh);
            for (int ow = 0; ow < ow_n; ++ow) {
              const auto [w0, w1] = window(ow, 2, x.w());
              T sum = T(0);
              for (int id = d0; id < d1; ++id) {
                for (int ih = h0; ih < h1; ++ih) {
                  const T* in_row = x.row(n, c, id, ih);
                  for (int iw = w0; iw < w1; ++iw) sum += in_row[iw];
                }
              }
              const int count = (d1 - d0) * (h1 - h0) * (w1 - w0);
              out_row[ow] = sum / static_cast<T>(count);
            }
          }
        }
      }
    });

    if (cache) in_shape_ = {x.n(), x.c(), x.d(), x.h(), x.w()};
    return out;
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    if (in_shape_[0] == 0) throw ValidationError("AvgPool3d: backward without cached forward");
    Tensor5<T> grad_in(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3], in_shape_[4]);
    auto [od_n, oh_n, ow_n] = output_dims(grad_in.d(), grad_in.h(), grad_in.w());

    parallel_for(static_cast<std::size_t>(grad_in.n()) * grad_in.c(), 4,
                 [&](std::size_t begin, std::size_t end) {
      for (std::size_t job = begin; job < end; ++job) {
        const int n = static_cast<int>(job) / grad_in.c();
        const int c = static_cast<int>(job) % grad_in.c();
        for (int od = 0; od < od_n; ++od) {
          const auto [d0, d1] = window(od, 0, grad_in.d());
          for (int oh = 0; oh < oh_n; ++oh) {
            const auto [h0, h1] = window(oh, 1, grad_in.h());
            const T* g_row = grad_out.row(n, c, od, oh);
            for (int ow = 0; ow < ow_n; ++ow) {
              const auto [w0, w1] = window(ow, 2, grad_in.w());
              const int count = (d1 - d0) * (h1 - h0) * (w1 - w0);
              const T share = g_row[ow] / static_cast<T>(count);
              for (int id = d0; id < d1; ++id) {
                for (int ih = h0; ih < h1; ++ih) {
                  T* gi_row = grad_in.row(n, c, id, ih);
                  for (int iw = w0; iw < w1; ++iw) gi_row[iw] += share;
                }
              }
            }
          }
        }
      }
    });
    return grad_in;
  }

private:
  std::pair<int, int> window(int out_idx, int axis, int in_dim) const {
    int lo = out_idx * stride_[axis] - padding_[axis];
    int hi = lo + kernel_[axis];
    return {std::max(lo, 0), std::min(hi, in_dim)};
  }

  std::array<int, 3> kernel_{1, 1, 1};
  std::array<int, 3> stride_{1, 1, 1};
  std::array<int, 3> padding_{0, 0, 0};
  bool ceil_mode_ = false;
  std::array<int, 5> in_shape_{0, 0, 0, 0, 0};
};

// Per-channel batch normalization over (N, D, H, W). Train mode normalizes
// with batch statistics and updates the running estimates; eval mode uses the
// running estimates (unbiased variance, the usual convention).
template <typename T>
class BatchNorm3d {
public:
  BatchNorm3d() = default;

  explicit BatchNorm3d(int channels, double eps = 1e-5, double momentum = 0.1)
      : channels_(channels), eps_(eps), momentum_(momentum) {
    if (channels < 1) throw ValidationError("BatchNorm3d: channels must be >= 1");
    if (!(eps > 0.0)) throw ValidationError("BatchNorm3d: eps must be positive");
    gamma_.assign(channels_, T(1));
    beta_.assign(channels_, T(0));
    gamma_grad_.assign(channels_, T(0));
    beta_grad_.assign(channels_, T(0));
    running_mean_.assign(channels_, T(0));
    running_var_.assign(channels_, T(1));
  }

  int channels() const { return channels_; }

  Tensor5<T> forward(const Tensor5<T>& x, bool train, bool cache = true) {
    if (x.c() != channels_) throw ValidationError("BatchNorm3d: channel mismatch");
    Tensor5<T> out(x.n(), x.c(), x.d(), x.h(), x.w());
    if (cache) {
      x_hat_ = Tensor5<T>(x.n(), x.c(), x.d(), x.h(), x.w());
      inv_std_.assign(channels_, T(0));
      train_mode_ = train;
    }
    const std::size_t slab = static_cast<std::size_t>(x.d()) * x.h() * x.w();
    const std::size_t m = static_cast<std::size_t>(x.n()) * slab;

    parallel_for(static_cast<std::size_t>(channels_), 1,
                 [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        T mean, var;
        if (train) {
          T sum = T(0);
          for (int n = 0; n < x.n(); ++n) {
            const T* src = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            for (std::size_t i = 0; i < slab; ++i) sum += src[i];
          }
          mean = sum / static_cast<T>(m);
          T sq = T(0);
          for (int n = 0; n < x.n(); ++n) {
            const T* src = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            for (std::size_t i = 0; i < slab; ++i) {
              T d = src[i] - mean;
              sq += d * d;
            }
          }
          var = sq / static_cast<T>(m);  // biased, used for normalization
          T var_unbiased = m > 1 ? sq / static_cast<T>(m - 1) : var;
          running_mean_[c] =
              static_cast<T>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean);
          running_var_[c] =
              static_cast<T>((1.0 - momentum_) * running_var_[c] + momentum_ * var_unbiased);
        } else {
          mean = running_mean_[c];
          var = running_var_[c];
        }
        const T inv_std = T(1) / std::sqrt(var + static_cast<T>(eps_));
        if (cache) inv_std_[c] = inv_std;
        const T g = gamma_[c], b = beta_[c];
        for (int n = 0; n < x.n(); ++n) {
          const T* src = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
          T* dst = out.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
          T* xh = cache ? x_hat_.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab
                        : nullptr;
          for (std::size_t i = 0; i < slab; ++i) {
            T normalized = (src[i] - mean) * inv_std;
            if (xh) xh[i] = normalized;
            dst[i] = g * normalized + b;
          }
        }
      }
    });
    return out;
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    if (x_hat_.empty()) throw ValidationError("BatchNorm3d: backward without cached forward");
    Tensor5<T> grad_in(grad_out.n(), grad_out.c(), grad_out.d(), grad_out.h(), grad_out.w());
    const std::size_t slab =
        static_cast<std::size_t>(grad_out.d()) * grad_out.h() * grad_out.w();
    const std::size_t m = static_cast<std::size_t>(grad_out.n()) * slab;

    parallel_for(static_cast<std::size_t>(channels_), 1,
                 [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (int n = 0; n < grad_out.n(); ++n) {
          const T* dy = grad_out.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
          const T* xh = x_hat_.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
          for (std::size_t i = 0; i < slab; ++i) {
            sum_dy += dy[i];
            sum_dy_xhat += dy[i] * xh[i];
          }
        }
        gamma_grad_[c] += sum_dy_xhat;
        beta_grad_[c] += sum_dy;

        const T g_inv_std = gamma_[c] * inv_std_[c];
        if (train_mode_) {
          const T mean_dy = sum_dy / static_cast<T>(m);
          const T mean_dy_xhat = sum_dy_xhat / static_cast<T>(m);
          for (int n = 0; n < grad_out.n(); ++n) {
            const T* dy =
                grad_out.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            const T* xh = x_hat_.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            T* dx = grad_in.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            for (std::size_t i = 0; i < slab; ++i) {
              dx[i] = g_inv_std * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
            }
          }
        } else {
          for (int n = 0; n < grad_out.n(); ++n) {
            const T* dy =
                grad_out.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            T* dx = grad_in.data() + (static_cast<std::size_t>(n) * channels_ + c) * slab;
            for (std::size_t i = 0; i < slab; ++i) dx[i] = g_inv_std * dy[i];
          }
        }
      }
    });
    return grad_in;
  }

  void zero_grad() {
    std::fill(gamma_grad_.begin(), gamma_grad_.end(), T(0));
    std::fill(beta_grad_.begin(), beta_grad_.end(), T(0));
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma_, &gamma_grad_, {channels_}});
    out.push_back({prefix + ".beta", &beta_, &beta_grad_, {channels_}});
  }

  // Running statistics: persisted with the weights but never optimized.
  void collect_state(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".running_mean", &running_mean_, nullptr, {channels_}});
    out.push_back({prefix + ".running_var", &running_var_, nullptr, {channels_}});
  }

  std::vector<T>& gamma() { return gamma_; }
  std::vector<T>& beta() { return beta_; }
  std::vector<T>& running_mean() { return running_mean_; }
  std::vector<T>& running_var() { return running_var_; }

private:
  int channels_ = 0;
  double eps_ = 1e-5;
  double momentum_ = 0.1;
  bool train_mode_ = false;
  std::vector<T> gamma_, beta_, gamma_grad_, beta_grad_;
  std::vector<T> running_mean_, running_var_;
  Tensor5<T> x_hat_;
  std::vector<T> inv_std_;
};

template <typename T>
class Relu {
public:
  Tensor5<T> forward(const Tensor5<T>& x, bool cache = true) {
    Tensor5<T> out(x.n(), x.c(), x.d(), x.h(), x.w());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.values()[i] = x.values()[i] > T(0) ? x.values()[i] : T(0);
    }
    if (cache) output_ = out;
    return out;
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    if (output_.empty()) throw ValidationError("Relu: backward without cached forward");
    Tensor5<T> grad_in(grad_out.n(), grad_out.c(), grad_out.d(), grad_out.h(), grad_out.w());
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      grad_in.values()[i] = output_.values()[i] > T(0) ? grad_out.values()[i] : T(0);
    }
    return grad_in;
  }

private:
  Tensor5<T> output_;
};

// Fully-connected head on (N, F, 1, 1, 1) feature vectors.
template <typename T>
class Linear {
public:
  Linear() = default;

  Linear(int in_features, int out_features)
      : in_f_(in_features), out_f_(out_features) {
    if (in_features < 1 || out_features < 1) {
      throw ValidationError("Linear: feature counts must be >= 1");
    }
    weight_.assign(static_cast<std::size_t>(out_f_) * in_f_, T(0));
    weight_grad_.assign(weight_.size(), T(0));
    bias_.assign(out_f_, T(0));
    bias_grad_.assign(out_f_, T(0));
  }

  void init(Rng& rng) {
    const double stddev = std::sqrt(2.0 / in_f_);
    for (T& w : weight_) w = static_cast<T>(rng.normal(0.0, stddev));
    for (T& b : bias_) b = T(0);
  }

  Tensor5<T> forward(const Tensor5<T>& x, bool cache = true) {
    if (x.c() != in_f_ || x.d() != 1 || x.h() != 1 || x.w() != 1) {
      throw ValidationError("Linear: expected (N, F, 1, 1, 1) input");
    }
    Tensor5<T> out(x.n(), out_f_, 1, 1, 1);
    for (int n = 0; n < x.n(); ++n) {
      const T* in = x.data() + static_cast<std::size_t>(n) * in_f_;
      T* o = out.data() + static_cast<std::size_t>(n) * out_f_;
      for (int j = 0; j < out_f_; ++j) {
        T acc = bias_[j];
        const T* wr = weight_.data() + static_cast<std::size_t>(j) * in_f_;
        for (int i = 0; i < in_f_; ++i) acc += wr[i] * in[i];
        o[j] = acc;
      }
    }
    if (cache) input_ = x;
    return out;
  }

  Tensor5<T> backward(const Tensor5<T>& grad_out) {
    if (input_.empty()) throw ValidationError("Linear: backward without cached forward");
    Tensor5<T> grad_in(input_.n(), in_f_, 1, 1, 1);
    for (int n = 0; n < input_.n(); ++n) {
      const T* in = input_.data() + static_cast<std::size_t>(n) * in_f_;
      const T* g = grad_out.data() + static_cast<std::size_t>(n) * out_f_;
      T* gi = grad_in.data() + static_cast<std::size_t>(n) * in_f_;
      for (int j = 0; j < out_f_; ++j) {
        bias_grad_[j] += g[j];
        T* wg = weight_grad_.data() + static_cast<std::size_t>(j) * in_f_;
        const T* wr = weight_.data() + static_cast<std::size_t>(j) * in_f_;
        for (int i = 0; i < in_f_; ++i) {
          wg[i] += g[j] * in[i];
          gi[i] += wr[i] * g[j];
        }
      }
    }
    return grad_in;
  }

  void zero_grad() {
    std::fill(weight_grad_.begin(), weight_grad_.end(), T(0));
    std::fill(bias_grad_.begin(), bias_grad_.end(), T(0));
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight_, &weight_grad_, {out_f_, in_f_}});
    out.push_back({prefix + ".bias", &bias_, &bias_grad_, {out_f_}});
  }

  std::vector<T>& weight() { return weight_; }
  std::vector<T>& bias() { return bias_; }
  int in_features() const { return in_f_; }
  int out_features() const { return out_f_; }

private:
  int in_f_ = 0, out_f_ = 0;
  std::vector<T> weight_, bias_, weight_grad_, bias_grad_;
  Tensor5<T> input_;
};

// Row softmax on (N, C, 1, 1, 1) logits with the usual max shift, so
// arbitrary finite logits stay in range.
template <typename T>
Tensor5<T> softmax_rows(const Tensor5<T>& logits) {
  if (logits.d() != 1 || logits.h() != 1 || logits.w() != 1) {
    throw ValidationError("softmax_rows: expected (N, C, 1, 1, 1) logits");
  }
  Tensor5<T> out(logits.n(), logits.c(), 1, 1, 1);
  for (int n = 0; n < logits.n(); ++n) {
    const T* in = logits.data() + static_cast<std::size_t>(n) * logits.c();
    T* o = out.data() + static_cast<std::size_t>(n) * logits.c();
    T max_v = in[0];
    for (int c = 1; c < logits.c(); ++c) max_v = std::max(max_v, in[c]);
    T sum = T(0);
    for (int c = 0; c < logits.c(); ++c) {
      o[c] = std::exp(in[c] - max_v);
      sum += o[c];
    }
    for (int c = 0; c < logits.c(); ++c) o[c] /= sum;
  }
  return out;
}

}  // namespace pedintent::nn
