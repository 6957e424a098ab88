#include "nsa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nsa/anneal.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

Policy uniform_policy(ProblemKind problem, double sigma) {
  if (problem == ProblemKind::kRosenbrock && !(sigma > 0.0)) {
    throw OutOfRange("Gaussian proposal sigma must be positive");
  }
  return UniformPolicy{sigma};
}

KnapsackResult greedy_value_weight(const KnapsackInstance& inst) {
  inst.validate();
  std::vector<std::size_t> order(inst.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return inst.values[a] / inst.weights[a] > inst.values[b] / inst.weights[b];
  });
  KnapsackResult r;
  r.solution = knapsack_initial(inst);
  for (std::size_t i : order) {
    if (r.solution.total_weight + inst.weights[i] <= inst.capacity) {
      apply_knapsack_flip(inst, r.solution, i);
    }
  }
  r.value = r.solution.total_value;
  return r;
}

BinPackingResult ffd(const BinPackingInstance& inst) {
  inst.validate();
  const std::size_t n = inst.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return inst.weights[a] > inst.weights[b];
  });
  BinPackingResult r;
  auto& s = r.solution;
  s.bin_of_item.assign(n, -1);
  s.free_capacity.assign(n, inst.capacity);
  s.item_count.assign(n, 0);
  for (std::size_t i : order) {
    for (std::size_t j = 0; j < n; ++j) {
      if (s.free_capacity[j] >= inst.weights[i]) {
        s.bin_of_item[i] = static_cast<int>(j);
        s.free_capacity[j] -= inst.weights[i];
        if (s.item_count[j]++ == 0) ++s.occupied_bins;
        break;
      }
    }
  }
  r.bins = s.occupied_bins;
  return r;
}

std::vector<SweepRow> fixed_sigma_sweep(const RosenbrockInstance& inst,
                                        std::span<const double> sigmas,
                                        const TemperatureSchedule& schedule,
                                        int n_instances, std::uint64_t seed,
                                        int workers) {
  if (n_instances < 1) throw OutOfRange("sweep needs at least one instance");
  const Dataset d = generate_rosenbrock(n_instances, inst.a, inst.b);
  AnnealOptions options;
  options.keep_records = false;
  std::vector<SweepRow> rows;
  for (double sigma : sigmas) {
    const auto trajs =
        batch_anneal(d.instances, uniform_policy(ProblemKind::kRosenbrock, sigma),
                     schedule, SamplingMode::kSampled, seed, options, workers);
    double sum = 0.0;
    for (const auto& t : trajs) sum += t.best_energy;
    const double n = static_cast<double>(trajs.size());
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& t : trajs) var += (t.best_energy - mean) * (t.best_energy - mean);
    const double sd = trajs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    rows.push_back({sigma, mean, sd / std::sqrt(n)});
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "sigma,mean_best_energy,std_error\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.sigma,
                  r.mean_best_energy, r.std_error);
    out += buf;
  }
  return out;
}

double random_search_knapsack(const KnapsackInstance& inst, int trials,
                              std::uint64_t seed) {
  inst.validate();
  if (trials < 1) throw OutOfRange("random search needs at least one trial");
  Rng rng(seed);
  const std::size_t n = inst.size();
  std::vector<std::size_t> order(n);
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double weight = 0.0;
    double value = 0.0;
    for (std::size_t i : order) {
      if (weight + inst.weights[i] > inst.capacity) break;
      weight += inst.weights[i];
      value += inst.values[i];
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace nsa
