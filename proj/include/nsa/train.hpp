#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nsa/es.hpp"
#include "nsa/policy.hpp"
#include "nsa/ppo.hpp"
#include "nsa/task.hpp"

namespace nsa {

enum class Trainer { kEs, kPpo };

std::string_view to_string(Trainer trainer);
Trainer trainer_from_string(std::string_view name);

struct TrainConfig {
  ProblemKind problem = ProblemKind::kKnapsack;
  Trainer trainer = Trainer::kPpo;
  int size = 50;
  int steps = 100;
  double t0 = 1.0;
  double tk = 0.1;
  int epochs = 1000;
  int batch = 256;
  RosenbrockInstance rosenbrock;
  EsConfig es;
  PpoConfig ppo;

  // Training-time defaults for each (problem, trainer) pair.
  static TrainConfig defaults(ProblemKind problem, Trainer trainer);

  TrainingTask task() const;
  void validate() const;

  // Flat object with every tunable key plus "problem" and "trainer".
  nlohmann::json to_json() const;
  // Overrides from a flat object. Unknown keys raise ConfigError naming the
  // valid ones; "problem"/"trainer" may only repeat the current values.
  void apply(const nlohmann::json& overrides);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct Checkpoint {
  TrainConfig config;
  std::uint64_t seed = 0;
  int epochs_completed = 0;
  PolicyBundle policy;
  std::optional<MlpParams> critic;  // PPO only
  EsState es;
  PpoState ppo;
};

struct CurveRow {
  int epoch = 0;
  double mean_best_energy = 0.0;
  double mean_acceptance_rate = 0.0;
  double wall_ms = 0.0;
};

// Random initial policy (and critic for PPO) drawn from derive_seed(seed, 0).
Checkpoint init_checkpoint(const TrainConfig& config, std::uint64_t seed);

using EpochCallback = std::function<void(const CurveRow&, const EpochStats&)>;

// Runs epochs epochs_completed + 1 .. epochs_completed + count, epoch e
// seeded with derive_seed(seed, e). Resuming from a saved checkpoint gives
// the same result as continuing in memory.
void train_epochs(Checkpoint& ckpt, int count, int workers,
                  const EpochCallback& on_epoch = {});

// init_checkpoint followed by config.epochs epochs.
Checkpoint train(const TrainConfig& config, std::uint64_t seed, int workers,
                 const EpochCallback& on_epoch = {});

std::string curve_csv_header();
std::string curve_csv_row(const CurveRow& row);

}  // namespace nsa
