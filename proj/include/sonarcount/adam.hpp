#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonarcount/tensor.hpp"

namespace sonarcount {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  std::string validate() const {
    if (!(learning_rate > 0.0)) return "learning rate must be > 0";
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) return "Adam betas must lie in (0,1)";
    if (!(epsilon > 0.0)) return "Adam epsilon must be > 0";
    return {};
  }
};

/// First and second moment accumulators, one per parameter tensor.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t t = 0;

  static AdamState zeros_like(const std::vector<Tensor<T>>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.shape);
      s.v.emplace_back(p.shape);
    }
    return s;
  }
};

/// One bias-corrected Adam update, in place:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (state.m.empty() && state.t == 0) state = AdamState<T>::zeros_like(params);
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape != params[i].shape || state.m[i].shape != params[i].shape ||
        state.v[i].shape != params[i].shape) {
      throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(i));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].values;
    auto& m = state.m[i].values;
    auto& v = state.v[i].values;
    const auto& g = grads[i].values;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const double m_hat = static_cast<double>(m[j]) / c1;
      const double v_hat = static_cast<double>(v[j]) / c2;
      p[j] = static_cast<T>(static_cast<double>(p[j]) - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace sonarcount
