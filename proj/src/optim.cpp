#include "nsa/optim.hpp"

#include <cmath>

#include "nsa/error.hpp"

namespace nsa {

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config) {
  const std::size_t n = params.size();
  if (grads.size() != n) throw ShapeError("gradient size differs from parameters");
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) {
    throw ShapeError("Adam state does not match parameter layout");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double shrink =
      config.decoupled ? 1.0 - config.lr * config.weight_decay : 1.0;
  const double l2 = config.decoupled ? 0.0 : config.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i] + l2 * params[i];
    params[i] *= shrink;
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       SgdState& state, double lr, double momentum) {
  const std::size_t n = params.size();
  if (grads.size() != n) throw ShapeError("gradient size differs from parameters");
  if (state.velocity.empty()) state.velocity.assign(n, 0.0);
  if (state.velocity.size() != n) {
    throw ShapeError("SGD state does not match parameter layout");
  }
  for (std::size_t i = 0; i < n; ++i) {
    state.velocity[i] = momentum * state.velocity[i] + grads[i];
    params[i] -= lr * state.velocity[i];
  }
}

}  // namespace nsa
