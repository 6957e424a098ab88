#pragma once

// Learnable proposal distributions: per-problem network layouts, feature
// construction, the Gaussian Rosenbrock head, the critic, and exact
// gradients of log-probabilities.

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nsa/categorical.hpp"
#include "nsa/mlp.hpp"
#include "nsa/problems.hpp"

namespace nsa {

struct NetSpec {
  const char* role;
  int in;
  int out;
};

// Knapsack: flip 5->1. Bin Packing: item 3->1, bin 3->1.
// TSP: first 7->1, second 13->1. Rosenbrock: sigma 2->2.
std::span<const NetSpec> net_layout(ProblemKind problem);

struct PolicyBundle {
  ProblemKind problem = ProblemKind::kKnapsack;
  std::vector<MlpParams> nets;  // in stage order

  static PolicyBundle zeros(ProblemKind problem);
  static PolicyBundle random(ProblemKind problem, Rng& rng);

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  // Throws ShapeError when the nets do not match net_layout(problem).
  void check_layout() const;
};

// Same input layout as the first policy stage, one output, separate weights.
MlpParams make_critic(ProblemKind problem, Rng& rng);
MlpParams zero_critic(ProblemKind problem);

// The vanilla proposal: uniform over unmasked actions at every stage, or a
// fixed isotropic Gaussian with the given sigma for Rosenbrock.
struct UniformPolicy {
  double sigma = 1.0;
};

using Policy = std::variant<UniformPolicy, PolicyBundle>;

// ------------------------------------------------------------------ features

inline constexpr int kKnapsackFeatures = 5;
inline constexpr int kBinPackingFeatures = 3;
inline constexpr int kTspFirstFeatures = 7;
inline constexpr int kTspSecondFeatures = 13;
inline constexpr int kRosenbrockFeatures = 2;

// Row i = (x_i, w_i, v_i, W, T). W is the fixed capacity, not free space.
void knapsack_features(const KnapsackInstance& inst,
                       const KnapsackSolution& sol, double temperature,
                       Eigen::Ref<FeatureMatrix> out);
FeatureMatrix knapsack_features(const KnapsackInstance& inst,
                                const KnapsackSolution& sol,
                                double temperature);

// Row i = (w_i, c_b(i), T).
void binpacking_item_features(const BinPackingInstance& inst,
                              const BinPackingSolution& sol,
                              double temperature,
                              Eigen::Ref<FeatureMatrix> out);
// Row j = (w_item, c_j, T).
void binpacking_bin_features(const BinPackingInstance& inst,
                             const BinPackingSolution& sol, double temperature,
                             std::size_t item, Eigen::Ref<FeatureMatrix> out);

enum class Stage { kFirst, kSecond };

FeatureMatrix binpacking_features(const BinPackingInstance& inst,
                                  const BinPackingSolution& sol,
                                  double temperature, Stage stage,
                                  int chosen_item = -1);

// Row i = (c_pred(i), c_i, c_succ(i), T).
void tsp_first_features(const TspInstance& inst, const TspTour& tour,
                        double temperature, Eigen::Ref<FeatureMatrix> out);
// Row j = (c_pred(i), c_i, c_succ(i), c_pred(j), c_j, c_succ(j), T).
void tsp_second_features(const TspInstance& inst, const TspTour& tour,
                         double temperature, int chosen,
                         Eigen::Ref<FeatureMatrix> out);
FeatureMatrix tsp_features(const TspInstance& inst, const TspTour& tour,
                           double temperature, Stage stage, int chosen = -1);

// Single row (x0, x1).
FeatureMatrix rosenbrock_features(const RosenbrockPoint& p);

// ---------------------------------------------------------- Gaussian policy

inline constexpr double kLogSigmaMin = -10.0;
inline constexpr double kLogSigmaMax = 3.0;

// sigma = exp(clamp(f(x0, x1), -10, 3)) per axis.
std::array<double, 2> gaussian_sigma(const MlpParams& params,
                                     const RosenbrockPoint& p);
// log N(step; 0, diag(sigma^2)).
double gaussian_log_density(const std::array<double, 2>& sigma,
                            const std::array<double, 2>& step);
// Gradient of upstream * log N(step; 0, sigma(x)^2) w.r.t. params. Clamped
// coordinates contribute no gradient.
MlpParams gaussian_backward(const MlpParams& params, const RosenbrockPoint& p,
                            const std::array<double, 2>& step,
                            double upstream);

// ------------------------------------------------------- gradients & critic

// Gradient of upstream * log softmax_mask(f(features))[action] with respect
// to every parameter of f.
MlpParams policy_backward(const MlpParams& params, const FeatureRef& features,
                          std::span<const std::uint8_t> mask, int action,
                          double upstream);

// Mean of per-row critic outputs.
double critic_value(const MlpParams& critic, const FeatureRef& features);

}  // namespace nsa
