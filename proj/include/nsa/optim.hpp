#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nsa {

struct AdamConfig {
  double lr = 2e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // false: weight_decay * params is added to the gradient instead (L2).
  bool decoupled = true;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

// Adam with bias correction. With decoupled weight decay the parameters are
// first shrunk by (1 - lr * weight_decay), then moved by the Adam update;
// otherwise weight_decay * params joins the gradient before the moments.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config);

struct SgdState {
  std::vector<double> velocity;
};

// v <- momentum * v + g; params <- params - lr * v.
void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       SgdState& state, double lr, double momentum);

}  // namespace nsa
