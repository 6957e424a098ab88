#include "nsa/dataset.hpp"

#include <string>

#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

namespace {

void check_counts(int n, int count, int min_n) {
  if (n < min_n) {
    throw InvalidInstance("instance size must be at least " +
                          std::to_string(min_n) + ", got " + std::to_string(n));
  }
  if (count < 0) throw InvalidInstance("instance count must be non-negative");
}

Dataset empty_dataset(ProblemKind problem, int n, int count,
                      std::uint64_t seed) {
  Dataset d;
  d.problem = problem;
  d.size = n;
  d.count = count;
  d.seed = seed;
  d.instances.reserve(static_cast<std::size_t>(count));
  return d;
}

}  // namespace

double knapsack_capacity(int n) {
  switch (n) {
    case 50:
      return 12.5;
    case 100:
    case 200:
      return 25.0;
    default:
      return n / 8.0;
  }
}

Dataset generate_knapsack(int n, int count, std::uint64_t seed) {
  check_counts(n, count, 1);
  Dataset d = empty_dataset(ProblemKind::kKnapsack, n, count, seed);
  Rng rng(seed);
  const auto un = static_cast<std::size_t>(n);
  for (int c = 0; c < count; ++c) {
    KnapsackInstance inst;
    inst.weights.resize(un);
    inst.values.resize(un);
    for (std::size_t i = 0; i < un; ++i) {
      inst.weights[i] = rng.uniform_left();
      inst.values[i] = rng.uniform_left();
    }
    inst.capacity = knapsack_capacity(n);
    d.instances.emplace_back(std::move(inst));
  }
  return d;
}

Dataset generate_binpacking(int n, int count, std::uint64_t seed) {
  check_counts(n, count, 1);
  Dataset d = empty_dataset(ProblemKind::kBinPacking, n, count, seed);
  Rng rng(seed);
  for (int c = 0; c < count; ++c) {
    BinPackingInstance inst;
    inst.weights.resize(static_cast<std::size_t>(n));
    for (auto& w : inst.weights) w = rng.uniform_left();
    inst.capacity = 1.0;
    d.instances.emplace_back(std::move(inst));
  }
  return d;
}

Dataset generate_tsp(int n, int count, std::uint64_t seed) {
  check_counts(n, count, 4);
  Dataset d = empty_dataset(ProblemKind::kTsp, n, count, seed);
  Rng rng(seed);
  for (int c = 0; c < count; ++c) {
    TspInstance inst;
    inst.coords.resize(static_cast<std::size_t>(n));
    for (auto& p : inst.coords) {
      p[0] = rng.uniform();
      p[1] = rng.uniform();
    }
    d.instances.emplace_back(std::move(inst));
  }
  return d;
}

Dataset generate_rosenbrock(int count, double a, double b) {
  check_counts(1, count, 1);
  Dataset d = empty_dataset(ProblemKind::kRosenbrock, 1, count, 0);
  RosenbrockInstance inst{a, b};
  inst.validate();
  d.instances.assign(static_cast<std::size_t>(count), Instance{inst});
  return d;
}

Dataset generate_dataset(ProblemKind problem, int n, int count,
                         std::uint64_t seed) {
  switch (problem) {
    case ProblemKind::kKnapsack:
      return generate_knapsack(n, count, seed);
    case ProblemKind::kBinPacking:
      return generate_binpacking(n, count, seed);
    case ProblemKind::kTsp:
      return generate_tsp(n, count, seed);
    case ProblemKind::kRosenbrock:
      return generate_rosenbrock(count);
  }
  throw InvalidInstance("unknown problem");
}

int rollout_length(ProblemKind problem, int n, int multiplier,
                   int rosenbrock_steps) {
  if (multiplier < 1) throw OutOfRange("rollout multiplier must be positive");
  switch (problem) {
    case ProblemKind::kKnapsack:
    case ProblemKind::kBinPacking:
      return multiplier * n;
    case ProblemKind::kTsp:
      return multiplier * n * n;
    case ProblemKind::kRosenbrock:
      return rosenbrock_steps;
  }
  throw OutOfRange("unknown problem");
}

}  // namespace nsa
