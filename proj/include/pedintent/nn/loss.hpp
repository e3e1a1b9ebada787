#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/nn/tensor.hpp"

namespace pedintent::nn {

template <typename T>
struct LossResult {
  T loss;
  Tensor5<T> grad_logits;  // (softmax - one_hot) / N, ready for backward()
};

// Mean negative log-likelihood over probability rows (N, C, 1, 1, 1).
template <typename T>
LossResult<T> cross_entropy_loss(const Tensor5<T>& probs, const std::vector<int>& labels) {
  if (probs.d() != 1 || probs.h() != 1 || probs.w() != 1) {
    throw ValidationError("cross_entropy_loss: expected (N, C, 1, 1, 1) probabilities");
  }
  if (static_cast<int>(labels.size()) != probs.n()) {
    throw ValidationError("cross_entropy_loss: label count mismatch");
  }
  const int classes = probs.c();
  const int n = probs.n();

  LossResult<T> result{T(0), Tensor5<T>(n, classes, 1, 1, 1)};
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw ValidationError("cross_entropy_loss: label outside class range");
    }
    const T* p = probs.data() + static_cast<std::size_t>(i) * classes;
    T* g = result.grad_logits.data() + static_cast<std::size_t>(i) * classes;
    result.loss -= std::log(std::max(p[labels[i]], std::numeric_limits<T>::min()));
    for (int c = 0; c < classes; ++c) {
      g[c] = (p[c] - (c == labels[i] ? T(1) : T(0))) / static_cast<T>(n);
    }
  }
  result.loss /= static_cast<T>(n);
  return result;
}

}  // namespace pedintent::nn
