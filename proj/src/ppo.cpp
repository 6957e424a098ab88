#include "nsa/ppo.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

#include "nsa/error.hpp"
#include "nsa/parallel.hpp"
#include "nsa/rewards.hpp"
#include "nsa/rng.hpp"

namespace nsa {

namespace {

int rollout_steps(const PpoRollout& r) {
  return static_cast<int>(r.old_log_prob.size());
}

// Log-probabilities of the recorded actions under the current nets, plus
// what is needed to backpropagate through them.
struct StagePass {
  Eigen::MatrixXd output;
  std::vector<double> log_prob;  // per step, 0 when the stage was skipped
};

void categorical_pass(const MlpParams& net, const StageRecord& stage,
                      int steps, StagePass& out) {
  pointwise_outputs(net, stage.features, out.output);
  out.log_prob.assign(static_cast<std::size_t>(steps), 0.0);
  const int rows = stage.rows_per_step;
  for (int k = 0; k < steps; ++k) {
    const int a = stage.action[static_cast<std::size_t>(k)];
    if (a < 0) continue;
    const Eigen::Index r0 = static_cast<Eigen::Index>(k) * rows;
    const std::uint8_t* m = stage.mask.data() + r0;
    double mx = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows; ++r) {
      if (m[r]) mx = std::max(mx, out.output(r0 + r, 0));
    }
    double z = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (m[r]) z += std::exp(out.output(r0 + r, 0) - mx);
    }
    out.log_prob[static_cast<std::size_t>(k)] =
        out.output(r0 + a, 0) - mx - std::log(z);
  }
}

// d_out for upstream * log pi(a_k) on each step block.
void categorical_upstream(const StageRecord& stage, const StagePass& pass,
                          std::span<const double> coeff,
                          Eigen::MatrixXd& d_out) {
  const int rows = stage.rows_per_step;
  d_out.setZero(pass.output.rows(), 1);
  for (std::size_t k = 0; k < coeff.size(); ++k) {
    const int a = stage.action[k];
    if (a < 0 || coeff[k] == 0.0) continue;
    const Eigen::Index r0 = static_cast<Eigen::Index>(k) * rows;
    const std::uint8_t* m = stage.mask.data() + r0;
    const double lp = pass.log_prob[k];
    const double mx_shift = pass.output(r0 + a, 0) - lp;  // log Z
    for (int r = 0; r < rows; ++r) {
      if (!m[r]) continue;
      const double p = std::exp(pass.output(r0 + r, 0) - mx_shift);
      d_out(r0 + r, 0) = coeff[k] * ((r == a ? 1.0 : 0.0) - p);
    }
  }
}

void gaussian_pass(const MlpParams& net, const RolloutSamples& samples,
                   int steps, StagePass& out) {
  pointwise_outputs(net, samples.stages[0].features, out.output);
  out.log_prob.assign(static_cast<std::size_t>(steps), 0.0);
  for (int k = 0; k < steps; ++k) {
    std::array<double, 2> sigma{};
    for (int d = 0; d < 2; ++d) {
      sigma[static_cast<std::size_t>(d)] = std::exp(
          std::clamp(out.output(k, d), kLogSigmaMin, kLogSigmaMax));
    }
    out.log_prob[static_cast<std::size_t>(k)] = gaussian_log_density(
        sigma, samples.gaussian_steps[static_cast<std::size_t>(k)]);
  }
}

void gaussian_upstream(const RolloutSamples& samples, const StagePass& pass,
                       std::span<const double> coeff, Eigen::MatrixXd& d_out) {
  d_out.setZero(pass.output.rows(), 2);
  for (std::size_t k = 0; k < coeff.size(); ++k) {
    for (int d = 0; d < 2; ++d) {
      const double o = pass.output(static_cast<Eigen::Index>(k), d);
      if (o < kLogSigmaMin || o > kLogSigmaMax) continue;
      const double z =
          samples.gaussian_steps[k][static_cast<std::size_t>(d)] / std::exp(o);
      d_out(static_cast<Eigen::Index>(k), d) = coeff[k] * (z * z - 1.0);
    }
  }
}

struct Partial {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  PolicyBundle policy_grad;
  MlpParams critic_grad;
};

Partial rollout_partial(const PolicyBundle& policy, const MlpParams& critic,
                        const PpoRollout& r, double clip_eps, double scale) {
  const int steps = rollout_steps(r);
  if (r.advantage.size() != static_cast<std::size_t>(steps) ||
      r.returns.size() != static_cast<std::size_t>(steps)) {
    throw ShapeError("rollout advantages/returns do not match its length");
  }
  const bool gaussian = policy.problem == ProblemKind::kRosenbrock;
  const std::size_t n_stages = policy.nets.size();
  if (r.samples.stages.size() != n_stages) {
    throw ShapeError("rollout stages do not match the policy");
  }
  Partial out;
  out.policy_grad = PolicyBundle::zeros(policy.problem);

  std::vector<StagePass> passes(n_stages);
  for (std::size_t s = 0; s < n_stages; ++s) {
    if (gaussian) {
      gaussian_pass(policy.nets[s], r.samples, steps, passes[s]);
    } else {
      categorical_pass(policy.nets[s], r.samples.stages[s], steps, passes[s]);
    }
  }

  std::vector<double> coeff(static_cast<std::size_t>(steps), 0.0);
  for (std::size_t k = 0; k < coeff.size(); ++k) {
    double lp = 0.0;
    for (const auto& p : passes) lp += p.log_prob[k];
    const double rho = std::exp(lp - r.old_log_prob[k]);
    const double a = r.advantage[k];
    const double unclipped = rho * a;
    const double clipped = std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps) * a;
    out.policy_loss -= std::min(unclipped, clipped) * scale;
    // The clipped branch is constant in theta.
    if (unclipped <= clipped) coeff[k] = -rho * a * scale;
  }

  Eigen::MatrixXd d_out;
  for (std::size_t s = 0; s < n_stages; ++s) {
    const auto& stage = r.samples.stages[s];
    if (gaussian) {
      gaussian_upstream(r.samples, passes[s], coeff, d_out);
    } else {
      categorical_upstream(stage, passes[s], coeff, d_out);
    }
    pointwise_backward(policy.nets[s], stage.features, d_out,
                       out.policy_grad.nets[s]);
  }

  // Critic on the first-stage features; V(s_k) is the mean over the rows.
  const auto& first = r.samples.stages[0];
  const int rows = first.rows_per_step;
  Eigen::MatrixXd cv;
  pointwise_outputs(critic, first.features, cv);
  Eigen::MatrixXd d_v = Eigen::MatrixXd::Zero(cv.rows(), 1);
  for (int k = 0; k < steps; ++k) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(k) * rows;
    const double v = cv.block(r0, 0, rows, 1).mean();
    const double err = v - r.returns[static_cast<std::size_t>(k)];
    out.value_loss += err * err * scale;
    d_v.block(r0, 0, rows, 1).setConstant(2.0 * err * scale / rows);
  }
  out.critic_grad = MlpParams::zeros(critic.in(), critic.out(), critic.hidden());
  pointwise_backward(critic, first.features, d_v, out.critic_grad);
  return out;
}

}  // namespace

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(clip_eps > 0.0)) throw ConfigError("clip_eps must be positive");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("gae_lambda must be in [0, 1]");
  }
  if (batch < 1) throw ConfigError("batch must be positive");
  if (update_epochs < 0) throw ConfigError("update_epochs must be non-negative");
  if (minibatches < 1) throw ConfigError("minibatches must be positive");
  if (lr < 0.0) throw ConfigError("lr must be non-negative");
}

PpoLoss ppo_loss_and_grad(const PolicyBundle& policy, const MlpParams& critic,
                          std::span<const PpoRollout> batch, double clip_eps,
                          int workers) {
  policy.check_layout();
  std::size_t total = 0;
  for (const auto& r : batch) total += static_cast<std::size_t>(rollout_steps(r));
  PpoLoss loss;
  loss.policy_grad = PolicyBundle::zeros(policy.problem);
  loss.critic_grad = MlpParams::zeros(critic.in(), critic.out(), critic.hidden());
  if (total == 0) return loss;
  const double scale = 1.0 / static_cast<double>(total);

  std::vector<Partial> parts(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    parts[i] = rollout_partial(policy, critic, batch[i], clip_eps, scale);
  });
  for (const auto& p : parts) {
    loss.policy_loss += p.policy_loss;
    loss.value_loss += p.value_loss;
    for (std::size_t s = 0; s < p.policy_grad.nets.size(); ++s) {
      loss.policy_grad.nets[s] += p.policy_grad.nets[s];
    }
    loss.critic_grad += p.critic_grad;
  }
  if (!std::isfinite(loss.policy_loss) || !std::isfinite(loss.value_loss)) {
    std::ostringstream msg;
    msg << "non-finite PPO loss (policy " << loss.policy_loss << ", value "
        << loss.value_loss << ") over " << batch.size() << " rollouts / "
        << total << " steps";
    throw TrainingDivergence(msg.str());
  }
  return loss;
}

std::vector<double> rollout_values(const MlpParams& critic,
                                   const RolloutSamples& samples) {
  const auto& first = samples.stages.at(0);
  const int rows = first.rows_per_step;
  const int steps = rows > 0 ? static_cast<int>(first.features.rows()) / rows : 0;
  std::vector<double> v(static_cast<std::size_t>(steps) + 1, 0.0);
  if (steps > 0) {
    Eigen::MatrixXd out;
    pointwise_outputs(critic, first.features, out);
    for (int k = 0; k < steps; ++k) {
      v[static_cast<std::size_t>(k)] =
          out.col(0).segment(static_cast<Eigen::Index>(k) * rows, rows).mean();
    }
  }
  v[static_cast<std::size_t>(steps)] = critic_value(critic, samples.terminal_features);
  return v;
}

void normalize_advantages(std::span<PpoRollout> batch) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : batch) {
    for (double a : r.advantage) sum += a;
    n += r.advantage.size();
  }
  if (n == 0) return;
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& r : batch) {
    for (double a : r.advantage) var += (a - mean) * (a - mean);
  }
  const double sd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
  for (auto& r : batch) {
    for (double& a : r.advantage) a = (a - mean) / sd;
  }
}

EpochStats ppo_epoch(PolicyBundle& policy, MlpParams& critic, PpoState& state,
                     const TrainingTask& task, const PpoConfig& config,
                     std::uint64_t epoch_seed, int workers) {
  config.validate();
  const std::vector<Instance> instances =
      sample_training_batch(task, config.batch, derive_seed(epoch_seed, 0));
  AnnealOptions options;
  options.keep_records = true;
  options.record_samples = true;
  std::vector<Trajectory> trajs =
      batch_anneal(instances, Policy{policy}, task.schedule,
                   SamplingMode::kSampled, derive_seed(epoch_seed, 1), options,
                   workers);

  EpochStats stats;
  std::vector<PpoRollout> batch(trajs.size());
  parallel_for(trajs.size(), workers, [&](std::size_t i) {
    Trajectory& t = trajs[i];
    PpoRollout& r = batch[i];
    std::vector<double> rewards(t.records.size());
    r.old_log_prob.resize(t.records.size());
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      rewards[k] = immediate_gain(t, static_cast<int>(k));
      r.old_log_prob[k] = t.records[k].log_prob;
    }
    const std::vector<double> values = rollout_values(critic, t.samples);
    GaeResult gae =
        gae_advantages(rewards, values, config.gamma, config.gae_lambda);
    r.advantage = std::move(gae.advantages);
    r.returns = std::move(gae.returns);
    r.samples = std::move(t.samples);
  });
  for (const auto& t : trajs) {
    stats.mean_best_energy += t.best_energy;
    stats.mean_acceptance_rate += t.acceptance_rate();
  }
  const double n = static_cast<double>(std::max<std::size_t>(trajs.size(), 1));
  stats.mean_best_energy /= n;
  stats.mean_acceptance_rate /= n;
  trajs.clear();

  normalize_advantages(batch);
  const AdamConfig adam = config.adam();
  Rng shuffle(derive_seed(epoch_seed, 3));
  const std::size_t chunks = std::min(
      static_cast<std::size_t>(config.minibatches), batch.size());
  for (int pass = 0; pass < config.update_epochs; ++pass) {
    if (chunks > 1) {
      for (std::size_t i = batch.size() - 1; i > 0; --i) {
        std::swap(batch[i], batch[shuffle.below(i + 1)]);
      }
    }
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = c * batch.size() / chunks;
      const std::size_t hi = (c + 1) * batch.size() / chunks;
      const PpoLoss loss =
          ppo_loss_and_grad(policy, critic,
                            std::span<const PpoRollout>(batch).subspan(lo, hi - lo),
                            config.clip_eps, workers);
      if (pass == 0 && c == 0) {
        stats.policy_loss = loss.policy_loss;
        stats.value_loss = loss.value_loss;
      }
      std::vector<double> theta = policy.flatten();
      adam_step(theta, loss.policy_grad.flatten(), state.policy, adam);
      std::vector<double> phi = critic.flatten();
      adam_step(phi, loss.critic_grad.flatten(), state.critic, adam);
      policy.assign(theta);
      critic.assign(phi);
      const bool finite =
          critic.all_finite() &&
          std::all_of(policy.nets.begin(), policy.nets.end(),
                      [](const MlpParams& m) { return m.all_finite(); });
      if (!finite) {
        throw TrainingDivergence("PPO update produced non-finite parameters at "
                                 "pass " + std::to_string(pass));
      }
    }
  }
  return stats;
}

}  // namespace nsa
