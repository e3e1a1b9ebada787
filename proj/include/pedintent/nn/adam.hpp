#pragma once

#include <cmath>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/nn/layers.hpp"

namespace pedintent::nn {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam. Moment accumulators are lazily shaped to the
// parameter list on the first step and then pinned to it.
template <typename T>
class AdamOptimizer {
public:
  explicit AdamOptimizer(AdamConfig config = {}) : config_(config) {}

  int step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

  void step(const std::vector<ParamRef<T>>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) {
        m_[p].assign(params[p].value->size(), T(0));
        v_[p].assign(params[p].value->size(), T(0));
      }
    }
    if (m_.size() != params.size()) {
      throw ValidationError("AdamOptimizer: parameter list changed size");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, step_);
    const double bc2 = 1.0 - std::pow(config_.beta2, step_);
    for (std::size_t p = 0; p < params.size(); ++p) {
      std::vector<T>& value = *params[p].value;
      const std::vector<T>& grad = *params[p].grad;
      if (value.size() != grad.size() || value.size() != m_[p].size()) {
        throw ValidationError("AdamOptimizer: shape mismatch");
      }
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        const double m = config_.beta1 * m_[p][i] + (1.0 - config_.beta1) * g;
        const double v = config_.beta2 * v_[p][i] + (1.0 - config_.beta2) * g * g;
        m_[p][i] = static_cast<T>(m);
        v_[p][i] = static_cast<T>(v);
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        value[i] -= static_cast<T>(config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
      }
    }
  }

private:
  AdamConfig config_;
  int step_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace pedintent::nn
