#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pedintent/nn/loss.hpp"
#include "pedintent/nn/model.hpp"
#include "pedintent/nn/tensor.hpp"

namespace pedintent::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Below this scale the comparison is effectively absolute; keeps finite-
  // difference noise on near-zero gradients from dominating the ratio.
  double denominator_floor = 1e-6;
  // Test hook: perturbs one analytic gradient entry so the harness itself can
  // be shown to catch a wrong backward pass.
  bool corrupt_analytic_gradient = false;
};

// Central-difference check of d(loss)/d(theta) for every parameter entry,
// against one analytic backward pass. loss = cross-entropy of the eval-mode
// forward (eval keeps batch statistics out of the derivative; train-mode BN
// gets its own dedicated check in the test suite). Relative error uses a
// small absolute floor so an exactly-zero gradient pair scores 0 rather than
// dividing by zero.
template <typename T>
GradCheckResult gradient_check(StDenseNet<T>& model, const Tensor5<T>& input,
                               const std::vector<int>& labels,
                               const GradCheckOptions& options = {}) {
  auto loss_value = [&]() {
    Tensor5<T> probs = model.forward(input, /*train=*/false, /*cache=*/false);
    return static_cast<double>(cross_entropy_loss(probs, labels).loss);
  };

  model.zero_grad();
  Tensor5<T> probs = model.forward(input, /*train=*/false);
  LossResult<T> loss = cross_entropy_loss(probs, labels);
  model.backward(loss.grad_logits);

  std::vector<ParamRef<T>> params = model.parameters();
  if (options.corrupt_analytic_gradient && !params.empty() && !params[0].grad->empty()) {
    (*params[0].grad)[0] = (*params[0].grad)[0] * T(1.5) + T(1e-3);
  }

  GradCheckResult result;
  const double floor = options.denominator_floor;
  for (const ParamRef<T>& param : params) {
    for (std::size_t i = 0; i < param.value->size(); ++i) {
      const T saved = (*param.value)[i];
      (*param.value)[i] = saved + static_cast<T>(options.eps);
      const double plus = loss_value();
      (*param.value)[i] = saved - static_cast<T>(options.eps);
      const double minus = loss_value();
      (*param.value)[i] = saved;

      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double analytic = static_cast<double>((*param.grad)[i]);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
      const double rel = std::abs(numeric - analytic) / scale;
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = param.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace pedintent::nn
