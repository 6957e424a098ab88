#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nsa/optim.hpp"
#include "nsa/policy.hpp"
#include "nsa/task.hpp"

namespace nsa {

struct EsConfig {
  int population = 16;
  double sigma = 0.05;
  double lr = 1e-3;
  double momentum = 0.9;
  int batch = 256;
  // Antithetic pairs (eps, -eps); population must then be even.
  bool mirrored = false;

  void validate() const;
};

struct EsState {
  SgdState sgd;
};

// g = 1 / (P sigma) * sum_p F~_p eps_p with F~ the z-scored fitness
// (std floored at 1e-8). Returns nullopt when every fitness is identical.
std::optional<std::vector<double>> es_gradient(
    std::span<const std::vector<double>> perturbations,
    std::span<const double> fitness, double sigma);

// One generation: perturb, score every member on the same freshly drawn
// instances with the same rollout seeds, and ascend the estimated gradient.
EpochStats es_epoch(PolicyBundle& policy, EsState& state,
                    const TrainingTask& task, const EsConfig& config,
                    std::uint64_t epoch_seed, int workers = 1);

}  // namespace nsa
