#include <string>

#include "nsa/error.hpp"
#include "nsa/problems.hpp"

namespace nsa {

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kKnapsack:
      return "knapsack";
    case ProblemKind::kBinPacking:
      return "binpacking";
    case ProblemKind::kTsp:
      return "tsp";
    case ProblemKind::kRosenbrock:
      return "rosenbrock";
  }
  return "unknown";
}

ProblemKind problem_from_string(std::string_view name) {
  if (name == "knapsack") return ProblemKind::kKnapsack;
  if (name == "binpacking") return ProblemKind::kBinPacking;
  if (name == "tsp") return ProblemKind::kTsp;
  if (name == "rosenbrock") return ProblemKind::kRosenbrock;
  throw ConfigError("unknown problem '" + std::string(name) +
                    "' (expected knapsack, binpacking, tsp or rosenbrock)");
}

ProblemKind kind_of(const Instance& inst) {
  return static_cast<ProblemKind>(inst.index());
}

std::size_t instance_size(const Instance& inst) {
  return std::visit(
      Overloaded{[](const RosenbrockInstance&) -> std::size_t { return 1; },
                 [](const auto& i) -> std::size_t { return i.size(); }},
      inst);
}

void validate(const Instance& inst) {
  std::visit([](const auto& i) { i.validate(); }, inst);
}

double energy(const Instance& inst, const Solution& sol) {
  if (inst.index() != sol.index()) {
    throw ShapeError("solution does not belong to the instance's problem");
  }
  switch (kind_of(inst)) {
    case ProblemKind::kKnapsack:
      return knapsack_energy(std::get<KnapsackInstance>(inst),
                             std::get<KnapsackSolution>(sol));
    case ProblemKind::kBinPacking:
      return binpacking_energy(std::get<BinPackingInstance>(inst),
                               std::get<BinPackingSolution>(sol));
    case ProblemKind::kTsp:
      return tsp_energy(std::get<TspInstance>(inst), std::get<TspTour>(sol));
    case ProblemKind::kRosenbrock:
      return rosenbrock_energy(std::get<RosenbrockInstance>(inst),
                               std::get<RosenbrockPoint>(sol));
  }
  return 0.0;
}

}  // namespace nsa
