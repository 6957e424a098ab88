#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "nsa/baselines.hpp"
#include "nsa/problems.hpp"

namespace nsa {

inline constexpr std::size_t kKnapsackOracleCap = 24;
inline constexpr std::size_t kTspOracleCap = 10;
inline constexpr std::size_t kBinPackingOracleCap = 10;

// Exhaustive 2^N search. Throws OutOfRange above the cap.
KnapsackResult brute_force_knapsack(const KnapsackInstance& inst);

struct TspOptimum {
  double length = 0.0;
  std::vector<int> order;  // starts at city 0
};

// Enumerates (N-1)!/2 tours with city 0 fixed first and one orientation.
TspOptimum brute_force_tsp(const TspInstance& inst);

// Depth-first assignment, heaviest item first, opening at most one new bin
// per branch (bins are interchangeable).
int brute_force_binpacking(const BinPackingInstance& inst);

// Optimal energy of any supported instance within the caps: -value for
// Knapsack, bins for Bin Packing, tour length for TSP. nullopt above the cap
// or for Rosenbrock.
std::optional<double> optimal_energy(const Instance& inst);

// Hash of the problem tag and the bit patterns of every instance number.
std::uint64_t instance_hash(const Instance& inst);

// Optimal energies keyed by instance hash, persisted as JSON.
class OracleCache {
 public:
  OracleCache() = default;
  explicit OracleCache(std::filesystem::path path);

  std::optional<double> find(const Instance& inst) const;
  void put(const Instance& inst, double energy);
  // Cached value, or computes, stores and returns it.
  std::optional<double> solve(const Instance& inst);
  // No-op without a path.
  void save() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path path_;
  std::map<std::uint64_t, double> entries_;
};

}  // namespace nsa
