#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "pedintent/common.hpp"

namespace pedintent::nn {

// 5-axis array (batch, channel, temporal depth, height, width), row-major
// with width innermost. The currency of the whole network stack.
template <typename T>
class Tensor5 {
public:
  Tensor5() = default;

  Tensor5(int n, int c, int d, int h, int w, T fill = T(0))
      : n_(n), c_(c), d_(d), h_(h), w_(w) {
    if (n < 1 || c < 1 || d < 1 || h < 1 || w < 1) {
      throw ValidationError("Tensor5: all dims must be >= 1");
    }
    values_.assign(static_cast<std::size_t>(n) * c * d * h * w, fill);
  }

  int n() const { return n_; }
  int c() const { return c_; }
  int d() const { return d_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::array<int, 5> shape() const { return {n_, c_, d_, h_, w_}; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& at(int n, int c, int d, int h, int w) { return values_[index(n, c, d, h, w)]; }
  const T& at(int n, int c, int d, int h, int w) const {
    return values_[index(n, c, d, h, w)];
  }

  // Pointer to the contiguous row (n, c, d, h, 0..w-1).
  T* row(int n, int c, int d, int h) { return values_.data() + index(n, c, d, h, 0); }
  const T* row(int n, int c, int d, int h) const {
    return values_.data() + index(n, c, d, h, 0);
  }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  void fill(T v) { values_.assign(values_.size(), v); }

  template <typename U>
  Tensor5<U> cast() const {
    Tensor5<U> out(n_, c_, d_, h_, w_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.values()[i] = static_cast<U>(values_[i]);
    return out;
  }

private:
  std::size_t index(int n, int c, int d, int h, int w) const {
    return ((((static_cast<std::size_t>(n) * c_ + c) * d_ + d) * h_ + h) * w_) + w;
  }

  int n_ = 0, c_ = 0, d_ = 0, h_ = 0, w_ = 0;
  std::vector<T> values_;
};

template <typename T>
bool same_shape(const Tensor5<T>& a, const Tensor5<T>& b) {
  return a.shape() == b.shape();
}

// Channel-axis concatenation; all other dims must agree.
template <typename T>
Tensor5<T> concat_channels(const std::vector<const Tensor5<T>*>& parts) {
  if (parts.empty()) throw ValidationError("concat_channels: no inputs");
  int total_c = 0;
  for (const Tensor5<T>* p : parts) {
    if (p->n() != parts[0]->n() || p->d() != parts[0]->d() || p->h() != parts[0]->h() ||
        p->w() != parts[0]->w()) {
      throw ValidationError("concat_channels: mismatched shapes");
    }
    total_c += p->c();
  }
  const Tensor5<T>& first = *parts[0];
  Tensor5<T> out(first.n(), total_c, first.d(), first.h(), first.w());
  const std::size_t slab = static_cast<std::size_t>(first.d()) * first.h() * first.w();
  for (int n = 0; n < first.n(); ++n) {
    T* dst = out.data() + static_cast<std::size_t>(n) * total_c * slab;
    for (const Tensor5<T>* p : parts) {
      const T* src = p->data() + static_cast<std::size_t>(n) * p->c() * slab;
      std::copy(src, src + static_cast<std::size_t>(p->c()) * slab, dst);
      dst += static_cast<std::size_t>(p->c()) * slab;
    }
  }
  return out;
}

// Inverse of concat_channels for gradient routing.
template <typename T>
std::vector<Tensor5<T>> split_channels(const Tensor5<T>& x, const std::vector<int>& sizes) {
  int total = 0;
  for (int s : sizes) total += s;
  if (total != x.c()) throw ValidationError("split_channels: sizes do not sum to channels");
  std::vector<Tensor5<T>> parts;
  parts.reserve(sizes.size());
  const std::size_t slab = static_cast<std::size_t>(x.d()) * x.h() * x.w();
  int offset = 0;
  for (int s : sizes) {
    Tensor5<T> part(x.n(), s, x.d(), x.h(), x.w());
    for (int n = 0; n < x.n(); ++n) {
      const T* src = x.data() + (static_cast<std::size_t>(n) * x.c() + offset) * slab;
      T* dst = part.data() + static_cast<std::size_t>(n) * s * slab;
      std::copy(src, src + static_cast<std::size_t>(s) * slab, dst);
    }
    offset += s;
    parts.push_back(std::move(part));
  }
  return parts;
}

}  // namespace pedintent::nn
