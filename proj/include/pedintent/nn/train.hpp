#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/nn/adam.hpp"
#include "pedintent/nn/loss.hpp"
#include "pedintent/nn/model.hpp"
#include "pedintent/rng.hpp"

namespace pedintent::nn {

template <typename T>
struct Sample {
  Tensor5<T> sequence;  // (1, C, D, H, W)
  int label;            // 0 = will not cross, 1 = will cross
};

struct TrainConfig {
  double lr = 0.01;     // Adam, as trained in the reference setup
  int batch_size = 10;
  int epochs = 70;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
};

struct EpochStats {
  double loss;      // mean over samples
  double accuracy;  // argmax agreement on training-mode outputs
};

namespace detail {

template <typename T>
Tensor5<T> stack_batch(const std::vector<Sample<T>>& dataset, const std::vector<int>& idx,
                       std::size_t begin, std::size_t end) {
  const Tensor5<T>& first = dataset[idx[begin]].sequence;
  Tensor5<T> batch(static_cast<int>(end - begin), first.c(), first.d(), first.h(), first.w());
  const std::size_t stride = first.size();
  for (std::size_t i = begin; i < end; ++i) {
    const Tensor5<T>& s = dataset[idx[i]].sequence;
    if (s.n() != 1 || s.c() != first.c() || s.d() != first.d() || s.h() != first.h() ||
        s.w() != first.w()) {
      throw ValidationError("train: inconsistent sample shapes");
    }
    std::copy(s.data(), s.data() + stride, batch.data() + (i - begin) * stride);
  }
  return batch;
}

}  // namespace detail

// Shuffled mini-batch loop. Fully deterministic for a fixed seed: the shuffle
// uses the explicit Fisher-Yates above and all kernel reductions are
// sequentially ordered, so the loss history is bitwise reproducible at any
// thread count.
template <typename T>
std::vector<EpochStats> train(StDenseNet<T>& model, const std::vector<Sample<T>>& dataset,
                              const TrainConfig& config) {
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  for (const auto& s : dataset) {
    if (s.label != 0 && s.label != 1) throw ValidationError("train: labels must be 0 or 1");
  }
  if (config.batch_size < 1 || config.epochs < 1) {
    throw ValidationError("train: batch_size and epochs must be >= 1");
  }

  AdamOptimizer<T> optimizer(AdamConfig{config.lr, config.beta1, config.beta2, config.eps});
  std::vector<ParamRef<T>> params = model.parameters();
  Rng rng(config.seed);

  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> history;
  history.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Tensor5<T> batch = detail::stack_batch(dataset, order, start, stop);
      std::vector<int> labels;
      labels.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) labels.push_back(dataset[order[i]].label);

      Tensor5<T> probs = model.forward(batch, /*train=*/true);
      LossResult<T> loss = cross_entropy_loss(probs, labels);
      loss_sum += static_cast<double>(loss.loss) * static_cast<double>(stop - start);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const T* row = probs.data() + i * probs.c();
        int argmax = 0;
        for (int c = 1; c < probs.c(); ++c) {
          if (row[c] > row[argmax]) argmax = c;
        }
        correct += argmax == labels[i];
      }

      model.zero_grad();
      model.backward(loss.grad_logits);
      optimizer.step(params);
    }
    history.push_back(EpochStats{loss_sum / static_cast<double>(dataset.size()),
                                 static_cast<double>(correct) /
                                     static_cast<double>(dataset.size())});
  }
  return history;
}

}  // namespace pedintent::nn
