#pragma once

#include <cstdint>
#include <vector>

#include "nsa/problems.hpp"
#include "nsa/schedule.hpp"

namespace nsa {

// What a trainer optimizes on: freshly generated instances of one size,
// annealed under one schedule.
struct TrainingTask {
  ProblemKind problem = ProblemKind::kKnapsack;
  int size = 50;
  TemperatureSchedule schedule;
  RosenbrockInstance rosenbrock;
};

std::vector<Instance> sample_training_batch(const TrainingTask& task,
                                            int count, std::uint64_t seed);

struct EpochStats {
  double mean_best_energy = 0.0;
  double mean_acceptance_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  bool skipped = false;
};

}  // namespace nsa
