#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsa/anneal.hpp"
#include "nsa/dataset.hpp"
#include "nsa/policy.hpp"
#include "nsa/train.hpp"

namespace nsa {

struct EvalOptions {
  int multiplier = 1;
  SamplingMode mode = SamplingMode::kSampled;
  std::vector<std::uint64_t> run_seeds{1, 2, 3, 4, 5};
  double t0 = 1.0;
  double tk = 0.1;
  int rosenbrock_steps = kRosenbrockDefaultSteps;
  int workers = 1;
  std::string trainer = "vanilla";
};

struct EvalReport {
  ProblemKind problem = ProblemKind::kKnapsack;
  int size = 0;
  int instances = 0;
  int steps = 0;
  int multiplier = 1;
  SamplingMode mode = SamplingMode::kSampled;
  std::string trainer;
  double t0 = 0.0;
  double tk = 0.0;
  std::vector<std::uint64_t> run_seeds;
  // Mean reported metric per run seed. Knapsack reports total value, every
  // other problem reports energy.
  std::vector<double> run_means;
  double mean = 0.0;
  double std = 0.0;  // population std of run_means
  double acceptance_rate = 0.0;
  double instance_min = 0.0;
  double instance_max = 0.0;
  double wall_ms = 0.0;
};

std::string_view to_string(SamplingMode mode);
SamplingMode mode_from_string(std::string_view name);

// Reported metric of a best energy: -energy for Knapsack, energy otherwise.
double reported_value(ProblemKind problem, double best_energy);

// Runs batch_anneal over the dataset once per run seed (run seed = master
// seed, so instance i of run r uses derive_seed(r, i)).
EvalReport evaluate(const Policy& policy, const Dataset& dataset,
                    const EvalOptions& options);

// Same, with the schedule endpoints of the checkpoint's training config.
// Throws ConfigError when the checkpoint was trained on another problem.
EvalReport evaluate(const Checkpoint& ckpt, const Dataset& dataset,
                    EvalOptions options);

enum class Sense { kMin, kMax };

// Percent gap to the reference, positive when worse.
double gap(double value, double reference, Sense sense);
Sense sense_of(ProblemKind problem);

std::string results_csv_header();
// With timing off, wall_ms is written as 0 so reruns are byte-identical.
std::string results_csv_row(const EvalReport& r, bool timing = true);
nlohmann::json report_to_json(const EvalReport& r, bool timing = true);

// Mean acceptance per step bucket; step k of K falls in bucket k * B / K.
std::vector<double> acceptance_curve(std::span<const Trajectory> trajs,
                                     int buckets);
std::string acceptance_curve_csv(std::span<const Trajectory> trajs,
                                 int buckets);

struct GridAxis {
  int feature = 0;
  double lo = 0.0;
  double hi = 1.0;
  int count = 1;
};

std::vector<std::string> feature_names(ProblemKind problem, int net);

// Evaluates net `net` on every (a, b) grid point, all other features fixed
// to `base`. One CSV row per point: the feature values, then the outputs.
std::string export_policy_logits(const PolicyBundle& policy, int net,
                                 std::span<const double> base,
                                 const GridAxis& a, const GridAxis& b);

}  // namespace nsa
