#pragma once

#include <cstdint>
#include <vector>

#include "nsa/problems.hpp"

namespace nsa {

struct Dataset {
  ProblemKind problem = ProblemKind::kKnapsack;
  int size = 0;
  int count = 0;
  std::uint64_t seed = 0;
  std::vector<Instance> instances;
};

// 12.5 for N = 50, 25 for N = 100 and N = 200, N / 8 otherwise.
double knapsack_capacity(int n);

// All generators draw from a single Rng(seed), instance after instance, so a
// dataset of `count` instances is a prefix of any larger one with the same
// seed. Weights and values are U(0, 1], coordinates U[0, 1)^2.
Dataset generate_knapsack(int n, int count, std::uint64_t seed);
Dataset generate_binpacking(int n, int count, std::uint64_t seed);
Dataset generate_tsp(int n, int count, std::uint64_t seed);
// `count` copies of the same (a, b); start points come from rollout seeds.
Dataset generate_rosenbrock(int count, double a = 1.0, double b = 100.0);

Dataset generate_dataset(ProblemKind problem, int n, int count,
                         std::uint64_t seed);

inline constexpr int kRosenbrockDefaultSteps = 100;

// m * N for Knapsack and Bin Packing, m * N^2 for TSP, the configured constant
// for Rosenbrock.
int rollout_length(ProblemKind problem, int n, int multiplier,
                   int rosenbrock_steps = kRosenbrockDefaultSteps);

}  // namespace nsa
