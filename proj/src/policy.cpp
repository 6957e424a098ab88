#include "nsa/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

namespace {

constexpr NetSpec kKnapsackNets[] = {{"flip", kKnapsackFeatures, 1}};
constexpr NetSpec kBinPackingNets[] = {{"item", kBinPackingFeatures, 1},
                                       {"bin", kBinPackingFeatures, 1}};
constexpr NetSpec kTspNets[] = {{"first", kTspFirstFeatures, 1},
                                {"second", kTspSecondFeatures, 1}};
constexpr NetSpec kRosenbrockNets[] = {{"sigma", kRosenbrockFeatures, 2}};

}  // namespace

std::span<const NetSpec> net_layout(ProblemKind problem) {
  switch (problem) {
    case ProblemKind::kKnapsack:
      return kKnapsackNets;
    case ProblemKind::kBinPacking:
      return kBinPackingNets;
    case ProblemKind::kTsp:
      return kTspNets;
    case ProblemKind::kRosenbrock:
      return kRosenbrockNets;
  }
  return {};
}

PolicyBundle PolicyBundle::zeros(ProblemKind problem) {
  PolicyBundle b{problem, {}};
  for (const auto& spec : net_layout(problem)) {
    b.nets.push_back(MlpParams::zeros(spec.in, spec.out));
  }
  return b;
}

PolicyBundle PolicyBundle::random(ProblemKind problem, Rng& rng) {
  PolicyBundle b{problem, {}};
  for (const auto& spec : net_layout(problem)) {
    b.nets.push_back(MlpParams::random(spec.in, spec.out, rng));
  }
  return b;
}

std::size_t PolicyBundle::parameter_count() const {
  std::size_t n = 0;
  for (const auto& net : nets) n += net.parameter_count();
  return n;
}

std::vector<double> PolicyBundle::flatten() const {
  std::vector<double> flat(parameter_count());
  std::size_t offset = 0;
  for (const auto& net : nets) {
    const std::size_t n = net.parameter_count();
    net.flatten_into(std::span<double>(flat).subspan(offset, n));
    offset += n;
  }
  return flat;
}

void PolicyBundle::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("flat parameter vector has wrong size for policy");
  }
  std::size_t offset = 0;
  for (auto& net : nets) {
    const std::size_t n = net.parameter_count();
    net.assign(flat.subspan(offset, n));
    offset += n;
  }
}

void PolicyBundle::check_layout() const {
  const auto layout = net_layout(problem);
  if (layout.size() != nets.size()) {
    throw ShapeError("policy for " + std::string(to_string(problem)) +
                     " needs " + std::to_string(layout.size()) + " nets");
  }
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (nets[k].in() != layout[k].in || nets[k].out() != layout[k].out) {
      throw ShapeError(std::string("net '") + layout[k].role +
                       "' has shape " + std::to_string(nets[k].in()) + "->" +
                       std::to_string(nets[k].out()) + ", expected " +
                       std::to_string(layout[k].in) + "->" +
                       std::to_string(layout[k].out));
    }
  }
}

MlpParams make_critic(ProblemKind problem, Rng& rng) {
  return MlpParams::random(net_layout(problem)[0].in, 1, rng);
}

MlpParams zero_critic(ProblemKind problem) {
  return MlpParams::zeros(net_layout(problem)[0].in, 1);
}

// ------------------------------------------------------------------ features

void knapsack_features(const KnapsackInstance& inst,
                       const KnapsackSolution& sol, double temperature,
                       Eigen::Ref<FeatureMatrix> out) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out(i, 0) = sol.bits[k] ? 1.0 : 0.0;
    out(i, 1) = inst.weights[k];
    out(i, 2) = inst.values[k];
    out(i, 3) = inst.capacity;
    out(i, 4) = temperature;
  }
}

FeatureMatrix knapsack_features(const KnapsackInstance& inst,
                                const KnapsackSolution& sol,
                                double temperature) {
  FeatureMatrix f(static_cast<Eigen::Index>(inst.size()), kKnapsackFeatures);
  knapsack_features(inst, sol, temperature, f);
  return f;
}

void binpacking_item_features(const BinPackingInstance& inst,
                              const BinPackingSolution& sol,
                              double temperature,
                              Eigen::Ref<FeatureMatrix> out) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out(i, 0) = inst.weights[k];
    out(i, 1) = sol.free_capacity[static_cast<std::size_t>(sol.bin_of_item[k])];
    out(i, 2) = temperature;
  }
}

void binpacking_bin_features(const BinPackingInstance& inst,
                             const BinPackingSolution& sol, double temperature,
                             std::size_t item, Eigen::Ref<FeatureMatrix> out) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  const double w = inst.weights[item];
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, 0) = w;
    out(j, 1) = sol.free_capacity[static_cast<std::size_t>(j)];
    out(j, 2) = temperature;
  }
}

FeatureMatrix binpacking_features(const BinPackingInstance& inst,
                                  const BinPackingSolution& sol,
                                  double temperature, Stage stage,
                                  int chosen_item) {
  FeatureMatrix f(static_cast<Eigen::Index>(inst.size()), kBinPackingFeatures);
  if (stage == Stage::kFirst) {
    binpacking_item_features(inst, sol, temperature, f);
  } else {
    if (chosen_item < 0 || static_cast<std::size_t>(chosen_item) >= inst.size()) {
      throw ShapeError("bin stage features need a chosen item");
    }
    binpacking_bin_features(inst, sol, temperature,
                            static_cast<std::size_t>(chosen_item), f);
  }
  return f;
}

namespace {

void write_neighbourhood(const TspInstance& inst, const TspTour& tour,
                         int city, Eigen::Ref<FeatureMatrix> out,
                         Eigen::Index row, Eigen::Index col) {
  const auto& p = inst.coords[static_cast<std::size_t>(tour.predecessor(city))];
  const auto& c = inst.coords[static_cast<std::size_t>(city)];
  const auto& s = inst.coords[static_cast<std::size_t>(tour.successor(city))];
  out(row, col + 0) = p[0];
  out(row, col + 1) = p[1];
  out(row, col + 2) = c[0];
  out(row, col + 3) = c[1];
  out(row, col + 4) = s[0];
  out(row, col + 5) = s[1];
}

}  // namespace

void tsp_first_features(const TspInstance& inst, const TspTour& tour,
                        double temperature, Eigen::Ref<FeatureMatrix> out) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    write_neighbourhood(inst, tour, static_cast<int>(i), out, i, 0);
    out(i, 6) = temperature;
  }
}

void tsp_second_features(const TspInstance& inst, const TspTour& tour,
                         double temperature, int chosen,
                         Eigen::Ref<FeatureMatrix> out) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  write_neighbourhood(inst, tour, chosen, out, 0, 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j > 0) out.row(j).head(6) = out.row(0).head(6);
    write_neighbourhood(inst, tour, static_cast<int>(j), out, j, 6);
    out(j, 12) = temperature;
  }
}

FeatureMatrix tsp_features(const TspInstance& inst, const TspTour& tour,
                           double temperature, Stage stage, int chosen) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  if (stage == Stage::kFirst) {
    FeatureMatrix f(n, kTspFirstFeatures);
    tsp_first_features(inst, tour, temperature, f);
    return f;
  }
  if (chosen < 0 || chosen >= n) {
    throw ShapeError("second stage features need a chosen city");
  }
  FeatureMatrix f(n, kTspSecondFeatures);
  tsp_second_features(inst, tour, temperature, chosen, f);
  return f;
}

FeatureMatrix rosenbrock_features(const RosenbrockPoint& p) {
  FeatureMatrix f(1, kRosenbrockFeatures);
  f(0, 0) = p.x0;
  f(0, 1) = p.x1;
  return f;
}

// ---------------------------------------------------------- Gaussian policy

std::array<double, 2> gaussian_sigma(const MlpParams& params,
                                     const RosenbrockPoint& p) {
  const double x[2] = {p.x0, p.x1};
  const Eigen::VectorXd o = mlp_forward(params, x);
  return {std::exp(std::clamp(o(0), kLogSigmaMin, kLogSigmaMax)),
          std::exp(std::clamp(o(1), kLogSigmaMin, kLogSigmaMax))};
}

double gaussian_log_density(const std::array<double, 2>& sigma,
                            const std::array<double, 2>& step) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double z = step[d] / sigma[d];
    lp += -std::log(sigma[d]) - 0.5 * z * z - half_log_2pi;
  }
  return lp;
}

MlpParams gaussian_backward(const MlpParams& params, const RosenbrockPoint& p,
                            const std::array<double, 2>& step,
                            double upstream) {
  const FeatureMatrix f = rosenbrock_features(p);
  PointwiseForward fwd;
  fwd.run(params, f);
  Eigen::MatrixXd d_out(1, 2);
  for (int d = 0; d < 2; ++d) {
    const double o = fwd.output(0, d);
    if (o < kLogSigmaMin || o > kLogSigmaMax) {
      d_out(0, d) = 0.0;
    } else {
      const double z = step[d] * std::exp(-o);
      d_out(0, d) = upstream * (z * z - 1.0);
    }
  }
  MlpParams grad = MlpParams::zeros(params.in(), params.out(), params.hidden());
  mlp_backward_accumulate(params, f, fwd, d_out, grad);
  return grad;
}

// ------------------------------------------------------- gradients & critic

MlpParams policy_backward(const MlpParams& params, const FeatureRef& features,
                          std::span<const std::uint8_t> mask, int action,
                          double upstream) {
  PointwiseForward fwd;
  fwd.run(params, features);
  const auto n = static_cast<std::size_t>(features.rows());
  if (mask.size() != n || action < 0 || static_cast<std::size_t>(action) >= n ||
      !mask[static_cast<std::size_t>(action)]) {
    throw ShapeError("action must index an unmasked row");
  }
  std::vector<double> logits(fwd.output.data(), fwd.output.data() + n);
  std::vector<double> probs(n);
  masked_softmax(logits, mask, probs);
  Eigen::MatrixXd d_out(features.rows(), 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double indicator = static_cast<int>(j) == action ? 1.0 : 0.0;
    d_out(static_cast<Eigen::Index>(j), 0) =
        mask[j] ? upstream * (indicator - probs[j]) : 0.0;
  }
  MlpParams grad = MlpParams::zeros(params.in(), params.out(), params.hidden());
  mlp_backward_accumulate(params, features, fwd, d_out, grad);
  return grad;
}

double critic_value(const MlpParams& critic, const FeatureRef& features) {
  PointwiseForward fwd;
  fwd.run(critic, features);
  return fwd.output.col(0).mean();
}

}  // namespace nsa
