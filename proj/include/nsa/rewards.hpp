#pragma once

#include <span>
#include <vector>

#include "nsa/anneal.hpp"

namespace nsa {

// E(x_k) - E(x_{k+1}); zero for rejected steps. Requires kept records.
double immediate_gain(const Trajectory& traj, int k);

// -(lowest energy seen over the rollout, x_0 included).
double primal_reward(const Trajectory& traj);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_k = r_k + gamma V_{k+1} - V_k, A_k = sum_l (gamma lambda)^l delta_{k+l}.
// values has K + 1 entries; values[K] is the critic's estimate of the final
// state (finite horizon, no further bootstrapping).
GaeResult gae_advantages(std::span<const double> rewards,
                         std::span<const double> values, double gamma,
                         double lambda);

}  // namespace nsa
