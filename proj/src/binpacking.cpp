#include <algorithm>
#include <cmath>
#include <string>

#include "nsa/error.hpp"
#include "nsa/problems.hpp"

namespace nsa {

void BinPackingInstance::validate() const {
  if (weights.empty()) throw InvalidInstance("bin packing needs at least one item");
  if (!(capacity > 0.0)) throw InvalidInstance("bin capacity must be > 0");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw InvalidInstance("bin packing item " + std::to_string(i) +
                            " needs a positive finite weight");
    }
    if (weights[i] > capacity) {
      throw InvalidInstance("item " + std::to_string(i) +
                            " is heavier than the bin capacity");
    }
  }
}

double binpacking_energy(const BinPackingInstance&,
                         const BinPackingSolution& sol) {
  return static_cast<double>(sol.occupied_bins);
}

BinPackingSolution binpacking_initial(const BinPackingInstance& inst) {
  const std::size_t n = inst.size();
  BinPackingSolution sol;
  sol.bin_of_item.resize(n);
  sol.free_capacity.resize(n);
  sol.item_count.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    sol.bin_of_item[i] = static_cast<int>(i);
    sol.free_capacity[i] = inst.capacity - inst.weights[i];
  }
  sol.occupied_bins = static_cast<int>(n);
  return sol;
}

void binpacking_bin_mask(const BinPackingInstance& inst,
                         const BinPackingSolution& sol, std::size_t item,
                         Mask& mask) {
  const std::size_t n = inst.size();
  const double w = inst.weights[item];
  mask.resize(n);
  for (std::size_t j = 0; j < n; ++j) mask[j] = sol.free_capacity[j] >= w;
  mask[static_cast<std::size_t>(sol.bin_of_item[item])] = 0;
}

Mask binpacking_bin_mask(const BinPackingInstance& inst,
                         const BinPackingSolution& sol, std::size_t item) {
  Mask mask;
  binpacking_bin_mask(inst, sol, item, mask);
  return mask;
}

double binpacking_move_delta(const BinPackingInstance&,
                             const BinPackingSolution& sol, std::size_t item,
                             std::size_t bin) {
  const auto from = static_cast<std::size_t>(sol.bin_of_item[item]);
  if (from == bin) return 0.0;
  const int emptied = sol.item_count[from] == 1 ? 1 : 0;
  const int opened = sol.item_count[bin] == 0 ? 1 : 0;
  return static_cast<double>(opened - emptied);
}

double apply_binpacking_move(const BinPackingInstance& inst,
                             BinPackingSolution& sol, std::size_t item,
                             std::size_t bin) {
  const std::size_t n = inst.size();
  if (item >= n || bin >= n) throw InfeasibleAction("bin move out of range");
  const auto from = static_cast<std::size_t>(sol.bin_of_item[item]);
  const double w = inst.weights[item];
  if (from == bin || sol.free_capacity[bin] < w) {
    throw InfeasibleAction("item " + std::to_string(item) +
                           " cannot be moved to bin " + std::to_string(bin));
  }
  const double delta = binpacking_move_delta(inst, sol, item, bin);
  sol.bin_of_item[item] = static_cast<int>(bin);
  if (--sol.item_count[from] == 0) {
    sol.free_capacity[from] = inst.capacity;
  } else {
    sol.free_capacity[from] += w;
  }
  ++sol.item_count[bin];
  sol.free_capacity[bin] -= w;
  sol.occupied_bins += static_cast<int>(delta);
  return delta;
}

bool binpacking_valid(const BinPackingInstance& inst,
                      const BinPackingSolution& sol, double tol) {
  const std::size_t n = inst.size();
  if (sol.bin_of_item.size() != n || sol.free_capacity.size() != n ||
      sol.item_count.size() != n) {
    return false;
  }
  std::vector<double> load(n, 0.0);
  std::vector<int> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int b = sol.bin_of_item[i];
    if (b < 0 || static_cast<std::size_t>(b) >= n) return false;
    load[static_cast<std::size_t>(b)] += inst.weights[i];
    ++count[static_cast<std::size_t>(b)];
  }
  int occupied = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double free = inst.capacity - load[j];
    if (free < -tol) return false;
    if (std::abs(free - sol.free_capacity[j]) > tol) return false;
    if (count[j] != sol.item_count[j]) return false;
    if (count[j] > 0) {
      ++occupied;
      if (!(sol.free_capacity[j] < inst.capacity)) return false;
    }
  }
  return occupied == sol.occupied_bins;
}

}  // namespace nsa
