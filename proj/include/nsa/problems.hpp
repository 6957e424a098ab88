#pragma once

// Problem kernels: instances, solutions, energies, feasibility masks and
// incremental energy deltas for Knapsack, Bin Packing, Euclidean TSP and
// the Rosenbrock function.
//
// Every kernel separates the O(1) delta computation (`*_delta`, pure) from the
// mutation (`apply_*`, in place, returns the delta). The annealer evaluates the
// delta, runs the Metropolis test and only mutates on acceptance.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace nsa {

class Rng;

using Mask = std::vector<std::uint8_t>;

enum class ProblemKind { kKnapsack, kBinPacking, kTsp, kRosenbrock };

std::string_view to_string(ProblemKind kind);
ProblemKind problem_from_string(std::string_view name);

// ---------------------------------------------------------------- Knapsack

struct KnapsackInstance {
  std::vector<double> weights;
  std::vector<double> values;
  double capacity = 0.0;

  std::size_t size() const { return weights.size(); }
  void validate() const;
};

struct KnapsackSolution {
  std::vector<std::uint8_t> bits;
  double total_weight = 0.0;
  double total_value = 0.0;
};

double knapsack_energy(const KnapsackInstance& inst,
                       const KnapsackSolution& sol);
KnapsackSolution knapsack_initial(const KnapsackInstance& inst);
// mask[i] = x_i == 1 || total_weight + w_i <= W.
void knapsack_mask(const KnapsackInstance& inst, const KnapsackSolution& sol,
                   Mask& mask);
Mask knapsack_mask(const KnapsackInstance& inst, const KnapsackSolution& sol);
double knapsack_flip_delta(const KnapsackInstance& inst,
                           const KnapsackSolution& sol, std::size_t i);
// Throws InfeasibleAction when inserting item i would exceed capacity.
double apply_knapsack_flip(const KnapsackInstance& inst, KnapsackSolution& sol,
                           std::size_t i);
// Recomputes caches and checks capacity; returns false on any mismatch
// larger than tol.
bool knapsack_valid(const KnapsackInstance& inst, const KnapsackSolution& sol,
                    double tol = 1e-9);

// ------------------------------------------------------------- Bin Packing

struct BinPackingInstance {
  std::vector<double> weights;
  double capacity = 1.0;

  std::size_t size() const { return weights.size(); }
  void validate() const;
};

// N bins for N items. item_count is kept alongside free_capacity so that
// occupancy is exact regardless of floating-point drift in the capacities.
struct BinPackingSolution {
  std::vector<int> bin_of_item;
  std::vector<double> free_capacity;
  std::vector<int> item_count;
  int occupied_bins = 0;
};

double binpacking_energy(const BinPackingInstance& inst,
                         const BinPackingSolution& sol);
BinPackingSolution binpacking_initial(const BinPackingInstance& inst);
// mask[j] = c_j >= w_i && j != b(i).
void binpacking_bin_mask(const BinPackingInstance& inst,
                         const BinPackingSolution& sol, std::size_t item,
                         Mask& mask);
Mask binpacking_bin_mask(const BinPackingInstance& inst,
                         const BinPackingSolution& sol, std::size_t item);
double binpacking_move_delta(const BinPackingInstance& inst,
                             const BinPackingSolution& sol, std::size_t item,
                             std::size_t bin);
double apply_binpacking_move(const BinPackingInstance& inst,
                             BinPackingSolution& sol, std::size_t item,
                             std::size_t bin);
bool binpacking_valid(const BinPackingInstance& inst,
                      const BinPackingSolution& sol, double tol = 1e-9);

// --------------------------------------------------------------------- TSP

using Point = std::array<double, 2>;

struct TspInstance {
  std::vector<Point> coords;

  std::size_t size() const { return coords.size(); }
  void validate() const;
  double distance(int a, int b) const;
};

struct TspTour {
  std::vector<int> order;     // tour position -> city
  std::vector<int> position;  // city -> tour position
  double length = 0.0;

  int successor(int city) const;
  int predecessor(int city) const;
};

double tour_length(const TspInstance& inst, std::span<const int> order);
double tsp_energy(const TspInstance& inst, const TspTour& tour);
TspTour make_tour(const TspInstance& inst, std::vector<int> order);
// Uniformly random permutation (Fisher-Yates).
TspTour tsp_initial(const TspInstance& inst, Rng& rng);
// False exactly for i, predecessor(i) and successor(i).
void tsp_city_mask(const TspTour& tour, int city, Mask& mask);
Mask tsp_city_mask(const TspTour& tour, int city);
// 2-opt move adding edge (i, j): with s = succ(i) and t = succ(j), the tour
// segment s..j is reversed so the new edges are (i, j) and (s, t).
double tsp_two_opt_delta(const TspInstance& inst, const TspTour& tour, int i,
                         int j);
double apply_two_opt(const TspInstance& inst, TspTour& tour, int i, int j);
bool tsp_valid(const TspInstance& inst, const TspTour& tour,
               double tol = 1e-9);

// -------------------------------------------------------------- Rosenbrock

struct RosenbrockInstance {
  double a = 1.0;
  double b = 100.0;

  void validate() const;
};

struct RosenbrockPoint {
  double x0 = 0.0;
  double x1 = 0.0;
};

double rosenbrock_energy(const RosenbrockInstance& inst,
                         const RosenbrockPoint& p);
// Start point drawn uniformly from [-2, 2]^2.
RosenbrockPoint rosenbrock_initial(Rng& rng);
// x' = x + step; delta from two energy evaluations.
double apply_rosenbrock_step(const RosenbrockInstance& inst,
                             RosenbrockPoint& p, double dx0, double dx1);

// ----------------------------------------------------------------- generic

using Instance = std::variant<KnapsackInstance, BinPackingInstance,
                              TspInstance, RosenbrockInstance>;
using Solution = std::variant<KnapsackSolution, BinPackingSolution, TspTour,
                              RosenbrockPoint>;

ProblemKind kind_of(const Instance& inst);
// Number of elements N (1 for Rosenbrock).
std::size_t instance_size(const Instance& inst);
void validate(const Instance& inst);
double energy(const Instance& inst, const Solution& sol);

}  // namespace nsa
