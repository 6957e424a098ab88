#include "nsa/es.hpp"

#include <cmath>
#include <cstdio>

#include "nsa/anneal.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

std::vector<Instance> sample_training_batch(const TrainingTask& task,
                                            int count, std::uint64_t seed) {
  if (task.problem == ProblemKind::kRosenbrock) {
    return generate_rosenbrock(count, task.rosenbrock.a, task.rosenbrock.b)
        .instances;
  }
  return generate_dataset(task.problem, task.size, count, seed).instances;
}

void EsConfig::validate() const {
  if (population < 2) throw ConfigError("ES population must be at least 2");
  if (mirrored && population % 2 != 0) {
    throw ConfigError("mirrored sampling needs an even population");
  }
  if (!(sigma > 0.0)) throw ConfigError("ES sigma must be positive");
  if (batch < 1) throw ConfigError("batch must be positive");
}

std::optional<std::vector<double>> es_gradient(
    std::span<const std::vector<double>> perturbations,
    std::span<const double> fitness, double sigma) {
  const std::size_t pop = fitness.size();
  if (perturbations.size() != pop || pop == 0) {
    throw ShapeError("one fitness value per perturbation is required");
  }
  double mean = 0.0;
  for (double f : fitness) mean += f;
  mean /= static_cast<double>(pop);
  double var = 0.0;
  for (double f : fitness) var += (f - mean) * (f - mean);
  var /= static_cast<double>(pop);
  if (var <= 0.0) return std::nullopt;
  const double sd = std::max(std::sqrt(var), 1e-8);

  const std::size_t dim = perturbations[0].size();
  std::vector<double> grad(dim, 0.0);
  for (std::size_t p = 0; p < pop; ++p) {
    if (perturbations[p].size() != dim) {
      throw ShapeError("perturbations differ in length");
    }
    const double w = (fitness[p] - mean) / sd;
    for (std::size_t i = 0; i < dim; ++i) grad[i] += w * perturbations[p][i];
  }
  const double scale = 1.0 / (static_cast<double>(pop) * sigma);
  for (double& g : grad) g *= scale;
  return grad;
}

EpochStats es_epoch(PolicyBundle& policy, EsState& state,
                    const TrainingTask& task, const EsConfig& config,
                    std::uint64_t epoch_seed, int workers) {
  config.validate();
  const std::vector<Instance> instances =
      sample_training_batch(task, config.batch, derive_seed(epoch_seed, 0));
  const std::uint64_t rollout_seed = derive_seed(epoch_seed, 1);
  Rng noise(derive_seed(epoch_seed, 2));

  const std::vector<double> theta = policy.flatten();
  const std::size_t dim = theta.size();
  const auto pop = static_cast<std::size_t>(config.population);
  std::vector<std::vector<double>> eps(pop, std::vector<double>(dim));
  const std::size_t drawn = config.mirrored ? pop / 2 : pop;
  for (std::size_t p = 0; p < drawn; ++p) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const auto z = noise.normal_pair();
      eps[p][i] = config.sigma * z[0];
      if (i + 1 < dim) eps[p][i + 1] = config.sigma * z[1];
    }
    if (config.mirrored) {
      for (std::size_t i = 0; i < dim; ++i) eps[drawn + p][i] = -eps[p][i];
    }
  }

  AnnealOptions options;
  options.keep_records = false;
  std::vector<double> fitness(pop, 0.0);
  double energy_sum = 0.0;
  double acceptance_sum = 0.0;
  PolicyBundle member = policy;
  std::vector<double> perturbed(dim);
  for (std::size_t p = 0; p < pop; ++p) {
    for (std::size_t i = 0; i < dim; ++i) perturbed[i] = theta[i] + eps[p][i];
    member.assign(perturbed);
    const auto trajs =
        batch_anneal(instances, Policy{member}, task.schedule,
                     SamplingMode::kSampled, rollout_seed, options, workers);
    double reward = 0.0;
    for (const auto& t : trajs) {
      reward -= t.best_energy;
      acceptance_sum += t.acceptance_rate();
    }
    fitness[p] = reward / static_cast<double>(trajs.size());
    energy_sum -= reward;
  }
  const double rollouts = static_cast<double>(pop * instances.size());

  EpochStats stats;
  stats.mean_best_energy = energy_sum / rollouts;
  stats.mean_acceptance_rate = acceptance_sum / rollouts;

  const auto grad = es_gradient(eps, fitness, config.sigma);
  if (!grad) {
    std::fprintf(stderr, "es: identical fitness across the population, "
                         "update skipped\n");
    stats.skipped = true;
    return stats;
  }
  // Ascent on reward: descend on -g.
  std::vector<double> descent(dim);
  for (std::size_t i = 0; i < dim; ++i) descent[i] = -(*grad)[i];
  std::vector<double> params = theta;
  sgd_momentum_step(params, descent, state.sgd, config.lr, config.momentum);
  for (double v : params) {
    if (!std::isfinite(v)) {
      throw TrainingDivergence("ES update produced non-finite parameters");
    }
  }
  policy.assign(params);
  return stats;
}

}  // namespace nsa
