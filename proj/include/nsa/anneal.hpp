#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nsa/categorical.hpp"
#include "nsa/mlp.hpp"
#include "nsa/policy.hpp"
#include "nsa/problems.hpp"
#include "nsa/schedule.hpp"

namespace nsa {

// first/second index the categorical stages (item/bin, city i/city j, bit);
// step is the Gaussian displacement for Rosenbrock.
struct Action {
  int first = -1;
  int second = -1;
  std::array<double, 2> step{0.0, 0.0};
};

struct StepRecord {
  Action action;
  double temperature = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double proposed_delta = 0.0;
  bool accepted = false;
  // Bin Packing: the sampled item had no feasible target bin.
  bool auto_rejected = false;
  double log_prob = 0.0;
  double reward = 0.0;  // immediate gain energy_before - energy_after
};

// Per-stage policy inputs captured for PPO. Rows of step k occupy
// [k * rows_per_step, (k + 1) * rows_per_step).
struct StageRecord {
  int rows_per_step = 0;
  FeatureMatrix features;
  Mask mask;
  std::vector<int> action;  // -1 when the stage was not reached
};

struct RolloutSamples {
  std::vector<StageRecord> stages;
  std::vector<std::array<double, 2>> gaussian_steps;
  // First-stage features of the final state at T_K (critic bootstrap).
  FeatureMatrix terminal_features;
};

struct Trajectory {
  std::vector<StepRecord> records;
  int steps = 0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double best_energy = 0.0;
  Solution best_solution;
  Solution final_solution;
  int acceptance_count = 0;
  RolloutSamples samples;

  double acceptance_rate() const {
    return steps > 0 ? static_cast<double>(acceptance_count) / steps : 0.0;
  }
};

struct AnnealOptions {
  bool keep_records = true;
  bool record_samples = false;
  // Cross-check every accepted delta against a full energy recompute.
  bool check_deltas = false;
  std::optional<Solution> initial;
};

// Runs K = schedule.steps proposal / Metropolis steps from the problem's
// initial solution. The RNG stream of Rng(seed) is consumed in this order:
// initial solution (TSP permutation, Rosenbrock start), then per step one
// uniform per categorical stage in Sampled mode (or one normal pair for
// Rosenbrock), then one uniform for the Metropolis test.
// Throws DegenerateState when no action is feasible.
Trajectory anneal(const Instance& instance, const Policy& policy,
                  const TemperatureSchedule& schedule, SamplingMode mode,
                  std::uint64_t seed, const AnnealOptions& options = {});

// Element i equals anneal(..., derive_seed(master_seed, i)).
std::vector<Trajectory> batch_anneal(std::span<const Instance> instances,
                                     const Policy& policy,
                                     const TemperatureSchedule& schedule,
                                     SamplingMode mode,
                                     std::uint64_t master_seed,
                                     const AnnealOptions& options = {},
                                     int workers = 1);

}  // namespace nsa
