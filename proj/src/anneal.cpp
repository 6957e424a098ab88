#include "nsa/anneal.hpp"

#include <cmath>
#include <string>

#include "nsa/error.hpp"
#include "nsa/parallel.hpp"
#include "nsa/rng.hpp"

namespace nsa {

namespace {

// Runs the categorical stages of one step: builds probabilities from the
// policy (or uniformly), draws the action and, when recording, stores the
// features, mask and action of each stage.
class StageSampler {
 public:
  StageSampler(const Policy& policy, SamplingMode mode, Rng& rng,
               RolloutSamples* samples, int steps, int rows, int stages,
               std::span<const NetSpec> layout)
      : mode_(mode), rng_(rng), samples_(samples), rows_(rows) {
    const auto* bundle = std::get_if<PolicyBundle>(&policy);
    for (int s = 0; s < stages; ++s) {
      nets_[s] = bundle ? &bundle->nets[static_cast<std::size_t>(s)] : nullptr;
      const int width = layout[static_cast<std::size_t>(s)].in;
      if (samples_) {
        StageRecord rec;
        rec.rows_per_step = rows;
        rec.features = FeatureMatrix::Zero(
            static_cast<Eigen::Index>(steps) * rows, width);
        rec.mask.assign(static_cast<std::size_t>(steps) * static_cast<std::size_t>(rows), 0);
        rec.action.assign(static_cast<std::size_t>(steps), -1);
        samples_->stages.push_back(std::move(rec));
      } else if (nets_[s]) {
        scratch_[s].resize(rows, width);
      }
    }
    logits_.resize(static_cast<std::size_t>(rows));
    probs_.resize(static_cast<std::size_t>(rows));
  }

  bool wants_features(int stage) const {
    return samples_ != nullptr || nets_[stage] != nullptr;
  }

  Eigen::Ref<FeatureMatrix> features(int stage, int step) {
    if (samples_) {
      return samples_->stages[static_cast<std::size_t>(stage)]
          .features.middleRows(static_cast<Eigen::Index>(step) * rows_, rows_);
    }
    return scratch_[stage];
  }

  Choice choose(int stage, int step, const Mask& mask) {
    if (const MlpParams* net = nets_[stage]) {
      pointwise_outputs(*net, features(stage, step), output_);
      for (int r = 0; r < rows_; ++r) {
        logits_[static_cast<std::size_t>(r)] = output_(r, 0);
      }
      masked_softmax(logits_, mask, probs_);
    } else {
      uniform_masked(mask, probs_);
    }
    const Choice c = sample_action(probs_, mode_, rng_);
    if (samples_) {
      auto& rec = samples_->stages[static_cast<std::size_t>(stage)];
      std::copy(mask.begin(), mask.end(),
                rec.mask.begin() + static_cast<std::ptrdiff_t>(step) * rows_);
      rec.action[static_cast<std::size_t>(step)] = c.index;
    }
    return c;
  }

 private:
  SamplingMode mode_;
  Rng& rng_;
  RolloutSamples* samples_;
  int rows_;
  const MlpParams* nets_[2] = {nullptr, nullptr};
  FeatureMatrix scratch_[2];
  Eigen::MatrixXd output_;
  std::vector<double> logits_;
  std::vector<double> probs_;
};

struct Proposal {
  Action action;
  double delta = 0.0;
  double log_prob = 0.0;
  bool auto_rejected = false;
};

struct KnapsackKernel {
  using Inst = KnapsackInstance;
  using Sol = KnapsackSolution;
  static constexpr int kStages = 1;
  Mask mask;

  static Sol initial(const Inst& inst, Rng&) { return knapsack_initial(inst); }
  static double energy(const Inst& inst, const Sol& sol) {
    return knapsack_energy(inst, sol);
  }
  static void first_features(const Inst& inst, const Sol& sol, double t,
                             Eigen::Ref<FeatureMatrix> out) {
    knapsack_features(inst, sol, t, out);
  }

  Proposal propose(const Inst& inst, const Sol& sol, double t, int step,
                   StageSampler& sampler) {
    knapsack_mask(inst, sol, mask);
    bool any = false;
    for (auto m : mask) any = any || m;
    if (!any) throw DegenerateState(step);
    if (sampler.wants_features(0)) {
      knapsack_features(inst, sol, t, sampler.features(0, step));
    }
    const Choice c = sampler.choose(0, step, mask);
    Proposal p;
    p.action.first = c.index;
    p.log_prob = c.log_prob;
    p.delta = knapsack_flip_delta(inst, sol, static_cast<std::size_t>(c.index));
    return p;
  }

  static double commit(const Inst& inst, Sol& sol, const Proposal& p,
                       double before) {
    apply_knapsack_flip(inst, sol, static_cast<std::size_t>(p.action.first));
    return before + p.delta;
  }
};

struct BinPackingKernel {
  using Inst = BinPackingInstance;
  using Sol = BinPackingSolution;
  static constexpr int kStages = 2;
  Mask all_items;
  Mask bins;

  static Sol initial(const Inst& inst, Rng&) { return binpacking_initial(inst); }
  static double energy(const Inst& inst, const Sol& sol) {
    return binpacking_energy(inst, sol);
  }
  static void first_features(const Inst& inst, const Sol& sol, double t,
                             Eigen::Ref<FeatureMatrix> out) {
    binpacking_item_features(inst, sol, t, out);
  }

  Proposal propose(const Inst& inst, const Sol& sol, double t, int step,
                   StageSampler& sampler) {
    all_items.assign(inst.size(), 1);
    if (sampler.wants_features(0)) {
      binpacking_item_features(inst, sol, t, sampler.features(0, step));
    }
    const Choice item = sampler.choose(0, step, all_items);
    Proposal p;
    p.action.first = item.index;
    p.log_prob = item.log_prob;
    const auto i = static_cast<std::size_t>(item.index);
    binpacking_bin_mask(inst, sol, i, bins);
    bool any = false;
    for (auto m : bins) any = any || m;
    if (!any) {
      p.auto_rejected = true;
      return p;
    }
    if (sampler.wants_features(1)) {
      binpacking_bin_features(inst, sol, t, i, sampler.features(1, step));
    }
    const Choice bin = sampler.choose(1, step, bins);
    p.action.second = bin.index;
    p.log_prob += bin.log_prob;
    p.delta = binpacking_move_delta(inst, sol, i, static_cast<std::size_t>(bin.index));
    return p;
  }

  static double commit(const Inst& inst, Sol& sol, const Proposal& p,
                       double before) {
    apply_binpacking_move(inst, sol, static_cast<std::size_t>(p.action.first),
                          static_cast<std::size_t>(p.action.second));
    return before + p.delta;
  }
};

struct TspKernel {
  using Inst = TspInstance;
  using Sol = TspTour;
  static constexpr int kStages = 2;
  Mask all_cities;
  Mask second;

  static Sol initial(const Inst& inst, Rng& rng) { return tsp_initial(inst, rng); }
  static double energy(const Inst&, const Sol& sol) { return sol.length; }
  static void first_features(const Inst& inst, const Sol& sol, double t,
                             Eigen::Ref<FeatureMatrix> out) {
    tsp_first_features(inst, sol, t, out);
  }

  Proposal propose(const Inst& inst, const Sol& sol, double t, int step,
                   StageSampler& sampler) {
    all_cities.assign(inst.size(), 1);
    if (sampler.wants_features(0)) {
      tsp_first_features(inst, sol, t, sampler.features(0, step));
    }
    const Choice i = sampler.choose(0, step, all_cities);
    tsp_city_mask(sol, i.index, second);
    if (sampler.wants_features(1)) {
      tsp_second_features(inst, sol, t, i.index, sampler.features(1, step));
    }
    const Choice j = sampler.choose(1, step, second);
    Proposal p;
    p.action.first = i.index;
    p.action.second = j.index;
    p.log_prob = i.log_prob + j.log_prob;
    p.delta = tsp_two_opt_delta(inst, sol, i.index, j.index);
    return p;
  }

  static double commit(const Inst& inst, Sol& sol, const Proposal& p,
                       double before) {
    apply_two_opt(inst, sol, p.action.first, p.action.second);
    return before + p.delta;
  }
};

double full_energy(const KnapsackInstance& inst, const KnapsackSolution& sol) {
  return knapsack_energy(inst, sol);
}
double full_energy(const BinPackingInstance& inst,
                   const BinPackingSolution& sol) {
  std::vector<int> count(inst.size(), 0);
  for (int b : sol.bin_of_item) ++count[static_cast<std::size_t>(b)];
  int occupied = 0;
  for (int c : count) occupied += c > 0 ? 1 : 0;
  return occupied;
}
double full_energy(const TspInstance& inst, const TspTour& tour) {
  return tour_length(inst, tour.order);
}

void check_delta(double cached, double recomputed, int step) {
  if (std::abs(cached - recomputed) > 1e-9) {
    throw Error("incremental energy " + std::to_string(cached) +
                " differs from recompute " + std::to_string(recomputed) +
                " at step " + std::to_string(step));
  }
}

template <class Kernel>
Trajectory run_categorical(const typename Kernel::Inst& inst,
                           const Policy& policy,
                           const TemperatureSchedule& schedule,
                           SamplingMode mode, std::uint64_t seed,
                           const AnnealOptions& options, ProblemKind kind) {
  using Sol = typename Kernel::Sol;
  Rng rng(seed);
  Sol sol = options.initial ? std::get<Sol>(*options.initial)
                            : Kernel::initial(inst, rng);
  const int steps = schedule.steps;
  const int rows = static_cast<int>(inst.size());
  Trajectory traj;
  traj.steps = steps;
  if (options.keep_records) traj.records.reserve(static_cast<std::size_t>(steps));
  StageSampler sampler(policy, mode, rng,
                       options.record_samples ? &traj.samples : nullptr,
                       steps, rows, Kernel::kStages, net_layout(kind));
  Kernel kernel;
  double e = Kernel::energy(inst, sol);
  traj.initial_energy = e;
  traj.best_energy = e;
  Sol best = sol;
  for (int k = 0; k < steps; ++k) {
    const double t = schedule.at(k);
    const Proposal p = kernel.propose(inst, sol, t, k, sampler);
    const double u = rng.uniform();
    const bool accepted = !p.auto_rejected && mh_accept(p.delta, t, u);
    const double before = e;
    if (accepted) {
      e = Kernel::commit(inst, sol, p, before);
      ++traj.acceptance_count;
      if (options.check_deltas) check_delta(e, full_energy(inst, sol), k);
      if (e < traj.best_energy) {
        traj.best_energy = e;
        best = sol;
      }
    }
    if (options.keep_records) {
      traj.records.push_back({p.action, t, before, e, p.delta, accepted,
                              p.auto_rejected, p.log_prob, before - e});
    }
  }
  if (options.record_samples) {
    traj.samples.terminal_features.resize(rows, net_layout(kind)[0].in);
    Kernel::first_features(inst, sol, schedule.at(steps),
                           traj.samples.terminal_features);
  }
  traj.final_energy = e;
  traj.final_solution = std::move(sol);
  traj.best_solution = std::move(best);
  return traj;
}

Trajectory run_rosenbrock(const RosenbrockInstance& inst, const Policy& policy,
                          const TemperatureSchedule& schedule,
                          SamplingMode mode, std::uint64_t seed,
                          const AnnealOptions& options) {
  Rng rng(seed);
  RosenbrockPoint x = options.initial
                          ? std::get<RosenbrockPoint>(*options.initial)
                          : rosenbrock_initial(rng);
  const int steps = schedule.steps;
  const auto* bundle = std::get_if<PolicyBundle>(&policy);
  const double fixed_sigma = bundle ? 0.0 : std::get<UniformPolicy>(policy).sigma;
  Trajectory traj;
  traj.steps = steps;
  if (options.keep_records) traj.records.reserve(static_cast<std::size_t>(steps));
  RolloutSamples* samples = options.record_samples ? &traj.samples : nullptr;
  if (samples) {
    StageRecord rec;
    rec.rows_per_step = 1;
    rec.features = FeatureMatrix::Zero(steps, kRosenbrockFeatures);
    rec.mask.assign(static_cast<std::size_t>(steps), 1);
    rec.action.assign(static_cast<std::size_t>(steps), 0);
    samples->stages.push_back(std::move(rec));
    samples->gaussian_steps.resize(static_cast<std::size_t>(steps));
  }
  double e = rosenbrock_energy(inst, x);
  traj.initial_energy = e;
  traj.best_energy = e;
  RosenbrockPoint best = x;
  for (int k = 0; k < steps; ++k) {
    const double t = schedule.at(k);
    const std::array<double, 2> sigma =
        bundle ? gaussian_sigma(bundle->nets[0], x)
               : std::array<double, 2>{fixed_sigma, fixed_sigma};
    std::array<double, 2> step{0.0, 0.0};
    if (mode == SamplingMode::kSampled) {
      const auto z = rng.normal_pair();
      step = {sigma[0] * z[0], sigma[1] * z[1]};
    }
    if (samples) {
      samples->stages[0].features(k, 0) = x.x0;
      samples->stages[0].features(k, 1) = x.x1;
      samples->gaussian_steps[static_cast<std::size_t>(k)] = step;
    }
    const RosenbrockPoint proposal{x.x0 + step[0], x.x1 + step[1]};
    const double proposed = rosenbrock_energy(inst, proposal);
    const double delta = proposed - e;
    const double u = rng.uniform();
    const bool accepted = mh_accept(delta, t, u);
    const double before = e;
    if (accepted) {
      x = proposal;
      e = proposed;
      ++traj.acceptance_count;
      if (e < traj.best_energy) {
        traj.best_energy = e;
        best = x;
      }
    }
    if (options.keep_records) {
      Action a;
      a.step = step;
      traj.records.push_back({a, t, before, e, delta, accepted, false,
                              gaussian_log_density(sigma, step), before - e});
    }
  }
  if (samples) samples->terminal_features = rosenbrock_features(x);
  traj.final_energy = e;
  traj.final_solution = x;
  traj.best_solution = best;
  return traj;
}

}  // namespace

Trajectory anneal(const Instance& instance, const Policy& policy,
                  const TemperatureSchedule& schedule, SamplingMode mode,
                  std::uint64_t seed, const AnnealOptions& options) {
  const ProblemKind kind = kind_of(instance);
  if (const auto* bundle = std::get_if<PolicyBundle>(&policy)) {
    if (bundle->problem != kind) {
      throw ShapeError("policy trained for " +
                       std::string(to_string(bundle->problem)) +
                       " cannot drive a " + std::string(to_string(kind)) +
                       " instance");
    }
    bundle->check_layout();
  }
  if (options.initial && options.initial->index() != instance.index()) {
    throw ShapeError("initial solution does not match the instance");
  }
  if (schedule.steps < 0) throw InvalidSchedule("negative rollout length");
  switch (kind) {
    case ProblemKind::kKnapsack:
      return run_categorical<KnapsackKernel>(
          std::get<KnapsackInstance>(instance), policy, schedule, mode, seed,
          options, kind);
    case ProblemKind::kBinPacking:
      return run_categorical<BinPackingKernel>(
          std::get<BinPackingInstance>(instance), policy, schedule, mode,
          seed, options, kind);
    case ProblemKind::kTsp:
      return run_categorical<TspKernel>(std::get<TspInstance>(instance),
                                        policy, schedule, mode, seed, options,
                                        kind);
    case ProblemKind::kRosenbrock:
      return run_rosenbrock(std::get<RosenbrockInstance>(instance), policy,
                            schedule, mode, seed, options);
  }
  throw Error("unknown problem");
}

std::vector<Trajectory> batch_anneal(std::span<const Instance> instances,
                                     const Policy& policy,
                                     const TemperatureSchedule& schedule,
                                     SamplingMode mode,
                                     std::uint64_t master_seed,
                                     const AnnealOptions& options,
                                     int workers) {
  for (std::size_t i = 1; i < instances.size(); ++i) {
    if (instances[i].index() != instances[0].index()) {
      throw BatchError(i, "mixed problem families in one batch");
    }
  }
  std::vector<Trajectory> out(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    try {
      out[i] = anneal(instances[i], policy, schedule, mode,
                      derive_seed(master_seed, i), options);
    } catch (const BatchError&) {
      throw;
    } catch (const std::exception& e) {
      throw BatchError(i, e.what());
    }
  });
  return out;
}

}  // namespace nsa
