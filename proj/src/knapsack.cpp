#include <cmath>
#include <string>

#include "nsa/error.hpp"
#include "nsa/problems.hpp"

namespace nsa {

void KnapsackInstance::validate() const {
  if (weights.empty()) throw InvalidInstance("knapsack needs at least one item");
  if (weights.size() != values.size()) {
    throw InvalidInstance("knapsack weights and values differ in length");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !(values[i] > 0.0) ||
        !std::isfinite(weights[i]) || !std::isfinite(values[i])) {
      throw InvalidInstance("knapsack item " + std::to_string(i) +
                            " needs positive finite weight and value");
    }
  }
  if (!(capacity > 0.0)) throw InvalidInstance("knapsack capacity must be > 0");
}

double knapsack_energy(const KnapsackInstance& inst,
                       const KnapsackSolution& sol) {
  double value = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (sol.bits[i]) value += inst.values[i];
  }
  return -value;
}

KnapsackSolution knapsack_initial(const KnapsackInstance& inst) {
  return {std::vector<std::uint8_t>(inst.size(), 0), 0.0, 0.0};
}

void knapsack_mask(const KnapsackInstance& inst, const KnapsackSolution& sol,
                   Mask& mask) {
  const std::size_t n = inst.size();
  mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = sol.bits[i] ||
              sol.total_weight + inst.weights[i] <= inst.capacity;
  }
}

Mask knapsack_mask(const KnapsackInstance& inst, const KnapsackSolution& sol) {
  Mask mask;
  knapsack_mask(inst, sol, mask);
  return mask;
}

double knapsack_flip_delta(const KnapsackInstance& inst,
                           const KnapsackSolution& sol, std::size_t i) {
  return sol.bits[i] ? inst.values[i] : -inst.values[i];
}

double apply_knapsack_flip(const KnapsackInstance& inst, KnapsackSolution& sol,
                           std::size_t i) {
  if (i >= inst.size()) throw InfeasibleAction("knapsack item out of range");
  if (sol.bits[i]) {
    sol.bits[i] = 0;
    sol.total_weight -= inst.weights[i];
    sol.total_value -= inst.values[i];
    return inst.values[i];
  }
  if (sol.total_weight + inst.weights[i] > inst.capacity) {
    throw InfeasibleAction("inserting item " + std::to_string(i) +
                           " exceeds knapsack capacity");
  }
  sol.bits[i] = 1;
  sol.total_weight += inst.weights[i];
  sol.total_value += inst.values[i];
  return -inst.values[i];
}

bool knapsack_valid(const KnapsackInstance& inst, const KnapsackSolution& sol,
                    double tol) {
  if (sol.bits.size() != inst.size()) return false;
  double weight = 0.0;
  double value = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (sol.bits[i] > 1) return false;
    if (sol.bits[i]) {
      weight += inst.weights[i];
      value += inst.values[i];
    }
  }
  return weight <= inst.capacity + tol &&
         std::abs(weight - sol.total_weight) <= tol &&
         std::abs(value - sol.total_value) <= tol;
}

}  // namespace nsa
