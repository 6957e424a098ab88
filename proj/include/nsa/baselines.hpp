#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsa/policy.hpp"
#include "nsa/problems.hpp"
#include "nsa/schedule.hpp"

namespace nsa {

// Vanilla SA proposal for any problem; sigma only matters for Rosenbrock.
Policy uniform_policy(ProblemKind problem, double sigma = 1.0);

struct KnapsackResult {
  KnapsackSolution solution;
  double value = 0.0;
};

// Items by value/weight descending (ties by index), each inserted if it fits.
KnapsackResult greedy_value_weight(const KnapsackInstance& inst);

struct BinPackingResult {
  BinPackingSolution solution;
  int bins = 0;
};

// First-Fit-Decreasing: heaviest first (ties by index) into the lowest
// indexed bin with room.
BinPackingResult ffd(const BinPackingInstance& inst);

struct SweepRow {
  double sigma = 0.0;
  double mean_best_energy = 0.0;
  double std_error = 0.0;
};

// Vanilla Gaussian SA for every sigma on n_instances random starts. Start i
// uses rollout seed derive_seed(seed, i) for every sigma.
std::vector<SweepRow> fixed_sigma_sweep(const RosenbrockInstance& inst,
                                        std::span<const double> sigmas,
                                        const TemperatureSchedule& schedule,
                                        int n_instances, std::uint64_t seed,
                                        int workers = 1);
std::string sweep_csv(std::span<const SweepRow> rows);

// Best of `trials` random feasible packings: a uniformly random item order,
// inserting items until the first one that does not fit.
double random_search_knapsack(const KnapsackInstance& inst, int trials,
                              std::uint64_t seed);

}  // namespace nsa
