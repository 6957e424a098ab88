#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsa/anneal.hpp"
#include "nsa/optim.hpp"
#include "nsa/policy.hpp"
#include "nsa/task.hpp"

namespace nsa {

struct PpoConfig {
  double lr = 2e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double gamma = 0.9;
  double clip_eps = 0.25;
  double gae_lambda = 0.9;
  int batch = 256;
  int update_epochs = 4;
  // Each pass is split into this many minibatches of whole rollouts, in an
  // order reshuffled every pass (at most one rollout per minibatch). 1 gives
  // full-batch steps.
  int minibatches = 4;
  bool decoupled_weight_decay = true;

  void validate() const;
  AdamConfig adam() const {
    return {lr, weight_decay, beta1, beta2, 1e-8, decoupled_weight_decay};
  }
};

struct PpoState {
  AdamState policy;
  AdamState critic;
};

// One recorded rollout ready for the surrogate loss. The per-step vectors
// have one entry per annealing step.
struct PpoRollout {
  RolloutSamples samples;
  std::vector<double> old_log_prob;
  std::vector<double> advantage;
  std::vector<double> returns;
};

struct PpoLoss {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  PolicyBundle policy_grad;
  MlpParams critic_grad;
};

// policy loss = -mean_k min(rho_k A_k, clip(rho_k, 1 - eps, 1 + eps) A_k),
// value loss  = mean_k (V(s_k) - R_k)^2, both over every step of every
// rollout. Gradients are exact; the policy gradient flows only through the
// policy nets, the value gradient only through the critic. Throws
// TrainingDivergence when either loss is not finite.
PpoLoss ppo_loss_and_grad(const PolicyBundle& policy, const MlpParams& critic,
                          std::span<const PpoRollout> batch, double clip_eps,
                          int workers = 1);

// Critic values V(s_0) .. V(s_K) of a recorded rollout.
std::vector<double> rollout_values(const MlpParams& critic,
                                   const RolloutSamples& samples);

// Zero mean, unit (population) std across every step of the batch.
void normalize_advantages(std::span<PpoRollout> batch);

// Collects one Sampled rollout per fresh instance, then runs
// config.update_epochs passes over the batch, each made of
// config.minibatches Adam steps on policy and critic.
EpochStats ppo_epoch(PolicyBundle& policy, MlpParams& critic, PpoState& state,
                     const TrainingTask& task, const PpoConfig& config,
                     std::uint64_t epoch_seed, int workers = 1);

}  // namespace nsa
