#include "nsa/rewards.hpp"

#include "nsa/error.hpp"

namespace nsa {

double immediate_gain(const Trajectory& traj, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= traj.records.size()) {
    throw OutOfRange("trajectory step out of range");
  }
  const auto& r = traj.records[static_cast<std::size_t>(k)];
  return r.accepted ? r.energy_before - r.energy_after : 0.0;
}

double primal_reward(const Trajectory& traj) { return -traj.best_energy; }

GaeResult gae_advantages(std::span<const double> rewards,
                         std::span<const double> values, double gamma,
                         double lambda) {
  const std::size_t k = rewards.size();
  if (values.size() != k + 1) {
    throw ShapeError("GAE needs one more value than rewards");
  }
  GaeResult out;
  out.advantages.assign(k, 0.0);
  out.returns.assign(k, 0.0);
  double running = 0.0;
  for (std::size_t i = k; i-- > 0;) {
    const double delta = rewards[i] + gamma * values[i + 1] - values[i];
    running = delta + gamma * lambda * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

}  // namespace nsa
