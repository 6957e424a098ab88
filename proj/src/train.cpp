#include "nsa/train.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

using nlohmann::json;

std::string_view to_string(Trainer trainer) {
  return trainer == Trainer::kEs ? "es" : "ppo";
}

Trainer trainer_from_string(std::string_view name) {
  if (name == "es") return Trainer::kEs;
  if (name == "ppo") return Trainer::kPpo;
  throw ConfigError("unknown trainer '" + std::string(name) +
                    "' (expected es or ppo)");
}

TrainConfig TrainConfig::defaults(ProblemKind problem, Trainer trainer) {
  TrainConfig c;
  c.problem = problem;
  c.trainer = trainer;
  const bool es = trainer == Trainer::kEs;
  switch (problem) {
    case ProblemKind::kKnapsack:
      c.size = 50;
      c.steps = 100;
      c.t0 = 1.0;
      c.tk = 0.1;
      c.epochs = 1000;
      break;
    case ProblemKind::kBinPacking:
      c.size = 50;
      c.steps = 100;
      c.t0 = es ? 0.1 : 1.0;
      c.tk = es ? 1e-4 : 0.1;
      c.epochs = 1000;
      break;
    case ProblemKind::kTsp:
      c.size = 20;
      c.steps = 40;
      c.t0 = 1.0;
      c.tk = es ? 1e-4 : 1e-2;
      c.epochs = es ? 10000 : 1000;
      break;
    case ProblemKind::kRosenbrock:
      c.size = 1;
      c.steps = 100;
      c.t0 = 1.0;
      c.tk = 0.01;
      c.epochs = 1000;
      break;
  }
  return c;
}

TrainingTask TrainConfig::task() const {
  TrainingTask t;
  t.problem = problem;
  t.size = size;
  t.schedule = TemperatureSchedule::make(t0, tk, steps);
  t.rosenbrock = rosenbrock;
  return t;
}

void TrainConfig::validate() const {
  if (size < 1) throw ConfigError("n must be positive");
  if (problem == ProblemKind::kTsp && size < 4) {
    throw ConfigError("TSP needs n >= 4");
  }
  if (steps < 1) throw ConfigError("steps must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch < 1) throw ConfigError("batch must be positive");
  try {
    compute_alpha(t0, tk, steps);
    rosenbrock.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  EsConfig e = es;
  e.batch = batch;
  e.validate();
  PpoConfig p = ppo;
  p.batch = batch;
  p.validate();
}

namespace {

// Every overridable key with a getter/setter pair, in echo order.
struct Field {
  const char* key;
  std::function<json(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const json&)> set;
};

template <class T, class Get>
Field field(const char* key, Get get) {
  return {key, [get](const TrainConfig& c) { return json(get(const_cast<TrainConfig&>(c))); },
          [get](TrainConfig& c, const json& v) { get(c) = v.get<T>(); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      field<int>("n", [](TrainConfig& c) -> int& { return c.size; }),
      field<int>("steps", [](TrainConfig& c) -> int& { return c.steps; }),
      field<double>("t0", [](TrainConfig& c) -> double& { return c.t0; }),
      field<double>("tk", [](TrainConfig& c) -> double& { return c.tk; }),
      field<int>("epochs", [](TrainConfig& c) -> int& { return c.epochs; }),
      field<int>("batch", [](TrainConfig& c) -> int& { return c.batch; }),
      field<double>("a", [](TrainConfig& c) -> double& { return c.rosenbrock.a; }),
      field<double>("b", [](TrainConfig& c) -> double& { return c.rosenbrock.b; }),
      field<int>("population", [](TrainConfig& c) -> int& { return c.es.population; }),
      field<double>("sigma", [](TrainConfig& c) -> double& { return c.es.sigma; }),
      field<double>("es_lr", [](TrainConfig& c) -> double& { return c.es.lr; }),
      field<double>("momentum", [](TrainConfig& c) -> double& { return c.es.momentum; }),
      field<bool>("mirrored", [](TrainConfig& c) -> bool& { return c.es.mirrored; }),
      field<double>("lr", [](TrainConfig& c) -> double& { return c.ppo.lr; }),
      field<double>("weight_decay", [](TrainConfig& c) -> double& { return c.ppo.weight_decay; }),
      field<double>("beta1", [](TrainConfig& c) -> double& { return c.ppo.beta1; }),
      field<double>("beta2", [](TrainConfig& c) -> double& { return c.ppo.beta2; }),
      field<double>("gamma", [](TrainConfig& c) -> double& { return c.ppo.gamma; }),
      field<double>("clip_eps", [](TrainConfig& c) -> double& { return c.ppo.clip_eps; }),
      field<double>("gae_lambda", [](TrainConfig& c) -> double& { return c.ppo.gae_lambda; }),
      field<int>("update_epochs", [](TrainConfig& c) -> int& { return c.ppo.update_epochs; }),
      field<int>("minibatches", [](TrainConfig& c) -> int& { return c.ppo.minibatches; }),
      field<bool>("decoupled_weight_decay", [](TrainConfig& c) -> bool& { return c.ppo.decoupled_weight_decay; }),
  };
  return all;
}

std::string valid_keys() {
  std::string out = "problem, trainer";
  for (const auto& f : fields()) out += std::string(", ") + f.key;
  return out;
}

}  // namespace

json TrainConfig::to_json() const {
  json j = json::object();
  j["problem"] = std::string(nsa::to_string(problem));
  j["trainer"] = std::string(nsa::to_string(trainer));
  for (const auto& f : fields()) j[f.key] = f.get(*this);
  return j;
}

void TrainConfig::apply(const json& overrides) {
  if (!overrides.is_object()) {
    throw ConfigError("config must be a JSON object; valid keys: " + valid_keys());
  }
  for (const auto& [key, value] : overrides.items()) {
    if (key == "problem" || key == "trainer") {
      const std::string current = key == "problem"
                                      ? std::string(nsa::to_string(problem))
                                      : std::string(nsa::to_string(trainer));
      if (!value.is_string() || value.get<std::string>() != current) {
        throw ConfigError("config key '" + key + "' conflicts with the command line");
      }
      continue;
    }
    const Field* match = nullptr;
    for (const auto& f : fields()) {
      if (key == f.key) match = &f;
    }
    if (!match) {
      throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid_keys());
    }
    try {
      match->set(*this, value);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }
  validate();
}

TrainConfig TrainConfig::from_json(const json& j) {
  try {
    TrainConfig c = defaults(problem_from_string(j.at("problem").get<std::string>()),
                             trainer_from_string(j.at("trainer").get<std::string>()));
    c.apply(j);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

Checkpoint init_checkpoint(const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.seed = seed;
  Rng rng(derive_seed(seed, 0));
  ckpt.policy = PolicyBundle::random(config.problem, rng);
  if (config.trainer == Trainer::kPpo) {
    ckpt.critic = make_critic(config.problem, rng);
  }
  return ckpt;
}

void train_epochs(Checkpoint& ckpt, int count, int workers,
                  const EpochCallback& on_epoch) {
  const TrainingTask task = ckpt.config.task();
  EsConfig es = ckpt.config.es;
  es.batch = ckpt.config.batch;
  PpoConfig ppo = ckpt.config.ppo;
  ppo.batch = ckpt.config.batch;
  if (ckpt.config.trainer == Trainer::kPpo && !ckpt.critic) {
    throw ConfigError("PPO checkpoint has no critic");
  }
  for (int i = 0; i < count; ++i) {
    const int epoch = ckpt.epochs_completed + 1;
    const std::uint64_t seed = derive_seed(ckpt.seed, static_cast<std::uint64_t>(epoch));
    const auto start = std::chrono::steady_clock::now();
    EpochStats stats;
    try {
      if (ckpt.config.trainer == Trainer::kEs) {
        stats = es_epoch(ckpt.policy, ckpt.es, task, es, seed, workers);
      } else {
        stats = ppo_epoch(ckpt.policy, *ckpt.critic, ckpt.ppo, task, ppo, seed,
                          workers);
      }
    } catch (const TrainingDivergence& e) {
      throw TrainingDivergence("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    ckpt.epochs_completed = epoch;
    if (on_epoch) {
      CurveRow row;
      row.epoch = epoch;
      row.mean_best_energy = stats.mean_best_energy;
      row.mean_acceptance_rate = stats.mean_acceptance_rate;
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      on_epoch(row, stats);
    }
  }
}

Checkpoint train(const TrainConfig& config, std::uint64_t seed, int workers,
                 const EpochCallback& on_epoch) {
  Checkpoint ckpt = init_checkpoint(config, seed);
  train_epochs(ckpt, config.epochs, workers, on_epoch);
  return ckpt;
}

std::string curve_csv_header() {
  return "epoch,mean_best_energy,mean_acceptance_rate,wall_ms";
}

std::string curve_csv_row(const CurveRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.3f", row.epoch,
                row.mean_best_energy, row.mean_acceptance_rate, row.wall_ms);
  return buf;
}

}  // namespace nsa
