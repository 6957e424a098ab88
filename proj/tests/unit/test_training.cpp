#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nsa/anneal.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/es.hpp"
#include "nsa/optim.hpp"
#include "nsa/policy.hpp"
#include "nsa/ppo.hpp"
#include "nsa/rewards.hpp"
#include "nsa/rng.hpp"
#include "nsa/serialize.hpp"
#include "nsa/train.hpp"

using namespace nsa;

namespace {

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

Trajectory recorded(const Instance& inst, const Policy& policy, int steps,
                    std::uint64_t seed) {
  AnnealOptions opt;
  opt.record_samples = true;
  return anneal(inst, policy, TemperatureSchedule::make(1.0, 0.1, steps),
                SamplingMode::kSampled, seed, opt);
}

// Rollouts collected under `behaviour`, with random advantages and returns.
std::vector<PpoRollout> make_batch(ProblemKind kind, int n, int steps,
                                   const PolicyBundle& behaviour, Rng& rng) {
  Dataset d = kind == ProblemKind::kRosenbrock
                  ? generate_rosenbrock(3)
                  : generate_dataset(kind, n, 3, rng.next());
  // Capacity 1 keeps every single item insertable.
  for (auto& i : d.instances) {
    if (auto* k = std::get_if<KnapsackInstance>(&i)) k->capacity = std::max(k->capacity, 1.0);
  }
  std::vector<PpoRollout> batch;
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    Trajectory t = recorded(d.instances[i], behaviour, steps, rng.next());
    PpoRollout r;
    r.samples = std::move(t.samples);
    for (const auto& rec : t.records) {
      r.old_log_prob.push_back(rec.log_prob);
      r.advantage.push_back(rng.uniform(-1.0, 1.0));
      r.returns.push_back(rng.uniform(-1.0, 1.0));
    }
    batch.push_back(std::move(r));
  }
  return batch;
}

PolicyBundle jitter(PolicyBundle p, Rng& rng, double scale) {
  std::vector<double> flat = p.flatten();
  for (double& x : flat) x += rng.uniform(-scale, scale);
  p.assign(flat);
  return p;
}

TrainConfig tiny_config(ProblemKind problem, Trainer trainer) {
  TrainConfig c = TrainConfig::defaults(problem, trainer);
  c.size = problem == ProblemKind::kRosenbrock ? 1 : 8;
  c.steps = 12;
  c.batch = 6;
  c.es.population = 4;
  c.epochs = 3;
  return c;
}

}  // namespace

// ------------------------------------------------------------------- rewards

TEST_CASE("immediate gain and primal reward") {
  Trajectory t;
  t.initial_energy = 1.0;
  t.best_energy = 0.4;
  t.records.resize(3);
  t.records[0] = {{}, 1.0, 1.0, 0.7, -0.3, true, false, 0.0, 0.3};
  t.records[1] = {{}, 1.0, 0.7, 0.7, 0.5, false, false, 0.0, 0.0};
  t.records[2] = {{}, 1.0, 0.7, 0.4, -0.3, true, false, 0.0, 0.3};
  CHECK(immediate_gain(t, 0) == doctest::Approx(0.3));
  CHECK(immediate_gain(t, 1) == 0.0);
  double total = 0.0;
  for (int k = 0; k < 3; ++k) total += immediate_gain(t, k);
  CHECK(total == doctest::Approx(1.0 - 0.4));
  CHECK(primal_reward(t) == -0.4);
}

TEST_CASE("gains telescope over a real trajectory") {
  const Dataset d = generate_knapsack(10, 1, 2);
  const Trajectory t = recorded(d.instances[0], UniformPolicy{}, 80, 5);
  double total = 0.0;
  for (int k = 0; k < 80; ++k) total += immediate_gain(t, k);
  CHECK(total == doctest::Approx(t.initial_energy - t.final_energy));
}

TEST_CASE("GAE") {
  const std::vector<double> r{1.0, -0.5, 2.0, 0.25, 0.0};
  const std::vector<double> zeros(6, 0.0);

  auto one_step = gae_advantages(r, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 0.9, 0.0);
  const std::vector<double> v{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  for (int k = 0; k < 5; ++k) {
    CHECK(one_step.advantages[static_cast<std::size_t>(k)] ==
          doctest::Approx(r[static_cast<std::size_t>(k)] + 0.9 * v[static_cast<std::size_t>(k) + 1] - v[static_cast<std::size_t>(k)]));
  }

  auto sums = gae_advantages(r, zeros, 1.0, 1.0);
  double suffix = 0.0;
  for (int k = 4; k >= 0; --k) {
    suffix += r[static_cast<std::size_t>(k)];
    CHECK(sums.advantages[static_cast<std::size_t>(k)] == doctest::Approx(suffix));
  }

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 5 + static_cast<int>(rng.below(20));
    std::vector<double> rew(static_cast<std::size_t>(K)), val(static_cast<std::size_t>(K) + 1);
    for (double& x : rew) x = rng.uniform(-1, 1);
    for (double& x : val) x = rng.uniform(-1, 1);
    const double gamma = rng.uniform(0.5, 1.0), lambda = rng.uniform(0.0, 1.0);
    const GaeResult g = gae_advantages(rew, val, gamma, lambda);
    for (int k = 0; k < K; ++k) {
      double a = 0.0;
      for (int l = 0; k + l < K; ++l) {
        const auto j = static_cast<std::size_t>(k + l);
        const double delta = rew[j] + gamma * val[j + 1] - val[j];
        a += std::pow(gamma * lambda, l) * delta;
      }
      CHECK(std::abs(g.advantages[static_cast<std::size_t>(k)] - a) <= 1e-12);
      CHECK(std::abs(g.returns[static_cast<std::size_t>(k)] - (a + val[static_cast<std::size_t>(k)])) <= 1e-12);
    }
  }
}

// ----------------------------------------------------------------- optimizers

TEST_CASE("adam") {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  std::vector<double> p{1.0, -2.0};
  AdamState s;
  adam_step(p, std::vector<double>{0.0, 0.0}, s, cfg);
  CHECK(p == std::vector<double>{1.0, -2.0});

  cfg = AdamConfig{};
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  p = {1.0, -2.0};
  s = {};
  const std::vector<double> g{0.5, -3.0};
  adam_step(p, g, s, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    const double p0 = i == 0 ? 1.0 : -2.0;
    const double expected = p0 * (1.0 - 0.001) - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(std::abs(p[i] - expected) <= 1e-12);
  }

  // Second identical step against the scripted recurrence.
  std::vector<double> q{1.0, -2.0};
  std::vector<double> m(2, 0.0), v(2, 0.0);
  for (int t = 1; t <= 2; ++t) {
    for (std::size_t i = 0; i < 2; ++i) {
      q[i] *= 1.0 - cfg.lr * cfg.weight_decay;
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      q[i] -= cfg.lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  adam_step(p, g, s, cfg);
  CHECK(s.step == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
}

TEST_CASE("adam with L2 weight decay") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  cfg.decoupled = false;
  std::vector<double> p{1.0, -2.0};
  AdamState s;
  const std::vector<double> g{0.5, -3.0};
  adam_step(p, g, s, cfg);
  // First step: the decayed gradient d = g + wd * p enters the moments and
  // the bias-corrected update is lr * d / (|d| + eps).
  const double d0 = 0.5 + 0.1 * 1.0, d1 = -3.0 + 0.1 * -2.0;
  CHECK(std::abs(p[0] - (1.0 - 0.01 * d0 / (std::abs(d0) + 1e-8))) <= 1e-12);
  CHECK(std::abs(p[1] - (-2.0 - 0.01 * d1 / (std::abs(d1) + 1e-8))) <= 1e-12);

  // A zero gradient still pulls the parameters toward zero.
  std::vector<double> r{0.5};
  AdamState sr;
  adam_step(r, std::vector<double>{0.0}, sr, cfg);
  CHECK(std::abs(r[0] - (0.5 - 0.01 * 0.05 / (0.05 + 1e-8))) <= 1e-12);
}

TEST_CASE("sgd with momentum") {
  std::vector<double> p{1.0};
  SgdState s;
  sgd_momentum_step(p, std::vector<double>{0.0}, s, 0.1, 0.9);
  CHECK(p[0] == 1.0);

  p = {1.0};
  s = {};
  sgd_momentum_step(p, std::vector<double>{2.0}, s, 0.1, 0.9);
  sgd_momentum_step(p, std::vector<double>{2.0}, s, 0.1, 0.9);
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * (2.0 + 1.9 * 2.0)).epsilon(1e-15));

  p = {1.0};
  s = {};
  sgd_momentum_step(p, std::vector<double>{2.0}, s, 0.1, 0.0);
  sgd_momentum_step(p, std::vector<double>{3.0}, s, 0.1, 0.0);
  CHECK(p[0] == doctest::Approx(0.5));
}

// ------------------------------------------------------------------------ ES

TEST_CASE("es gradient") {
  const std::vector<std::vector<double>> eps{{0.3, -0.2}, {-0.3, 0.2}};
  auto g = es_gradient(eps, std::vector<double>{1.0, -1.0}, 0.1);
  REQUIRE(g.has_value());
  CHECK((*g)[0] == doctest::Approx(0.3 / 0.1));
  CHECK((*g)[1] == doctest::Approx(-0.2 / 0.1));

  CHECK_FALSE(es_gradient(eps, std::vector<double>{0.5, 0.5}, 0.1).has_value());

  // Fitness is standardized, so an affine rescaling changes nothing.
  const std::vector<std::vector<double>> four{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const auto a = es_gradient(four, std::vector<double>{1, 2, 3, 4}, 0.5);
  const auto b = es_gradient(four, std::vector<double>{10, 30, 50, 70}, 0.5);
  CHECK(rel_error(*a, *b) < 1e-12);
}

TEST_CASE("es epoch is deterministic") {
  TrainConfig c = tiny_config(ProblemKind::kKnapsack, Trainer::kEs);
  c.size = 20;
  c.steps = 40;
  c.batch = 16;
  Rng rng(1);
  const PolicyBundle start = PolicyBundle::random(ProblemKind::kKnapsack, rng);
  PolicyBundle a = start, b = start;
  EsState sa, sb;
  EsConfig es = c.es;
  es.batch = c.batch;
  const auto ra = es_epoch(a, sa, c.task(), es, 77, 1);
  const auto rb = es_epoch(b, sb, c.task(), es, 77, 3);
  CHECK(a.flatten() == b.flatten());
  CHECK(ra.mean_best_energy == rb.mean_best_energy);
  CHECK_FALSE(ra.skipped);
  CHECK(a.flatten() != start.flatten());

  es.mirrored = true;
  es.population = 3;
  CHECK_THROWS_AS(es.validate(), ConfigError);
}

// ----------------------------------------------------------------------- PPO

TEST_CASE("ppo loss gradients match finite differences") {
  Rng rng(21);
  const ProblemKind kinds[] = {ProblemKind::kKnapsack, ProblemKind::kBinPacking,
                               ProblemKind::kTsp, ProblemKind::kRosenbrock};
  int cases = 0;
  for (int trial = 0; trial < 25; ++trial) {
    for (ProblemKind kind : kinds) {
      const PolicyBundle behaviour = PolicyBundle::random(kind, rng);
      const auto batch = make_batch(kind, 6, 5, behaviour, rng);
      INFO("problem ", std::string(to_string(kind)), " trial ", trial);
      // Moving away from the behaviour policy puts some ratios outside the
      // clip range.
      const PolicyBundle policy = jitter(behaviour, rng, 0.3);
      const MlpParams critic = make_critic(kind, rng);
      const double clip = 0.25;
      const PpoLoss loss = ppo_loss_and_grad(policy, critic, batch, clip);

      // Small steps keep the central differences clear of ReLU and clip
      // kinks, which a batch of this size has many of.
      const double h = 1e-6;
      std::vector<double> flat = policy.flatten();
      std::vector<double> fd(flat.size());
      for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        PolicyBundle q = policy;
        flat[i] = keep + h;
        q.assign(flat);
        const double up = ppo_loss_and_grad(q, critic, batch, clip).policy_loss;
        flat[i] = keep - h;
        q.assign(flat);
        const double down = ppo_loss_and_grad(q, critic, batch, clip).policy_loss;
        flat[i] = keep;
        fd[i] = (up - down) / (2 * h);
      }
      CHECK(rel_error(loss.policy_grad.flatten(), fd) <= 1e-5);

      std::vector<double> cflat = critic.flatten();
      std::vector<double> cfd(cflat.size());
      for (std::size_t i = 0; i < cflat.size(); ++i) {
        const double keep = cflat[i];
        MlpParams q = critic;
        cflat[i] = keep + h;
        q.assign(cflat);
        const double up = ppo_loss_and_grad(policy, q, batch, clip).value_loss;
        cflat[i] = keep - h;
        q.assign(cflat);
        const double down = ppo_loss_and_grad(policy, q, batch, clip).value_loss;
        cflat[i] = keep;
        cfd[i] = (up - down) / (2 * h);
      }
      CHECK(rel_error(loss.critic_grad.flatten(), cfd) <= 1e-5);
      ++cases;
    }
  }
  CHECK(cases == 100);
}

TEST_CASE("ppo at the behaviour policy is the plain policy gradient") {
  Rng rng(22);
  const PolicyBundle policy = PolicyBundle::random(ProblemKind::kKnapsack, rng);
  const auto batch = make_batch(ProblemKind::kKnapsack, 6, 7, policy, rng);
  const MlpParams critic = make_critic(ProblemKind::kKnapsack, rng);
  const PpoLoss loss = ppo_loss_and_grad(policy, critic, batch, 0.25);

  double steps = 0.0;
  for (const auto& r : batch) steps += static_cast<double>(r.advantage.size());
  MlpParams expected = MlpParams::zeros(5, 1);
  for (const auto& r : batch) {
    const auto& st = r.samples.stages[0];
    for (std::size_t k = 0; k < r.advantage.size(); ++k) {
      const auto r0 = static_cast<Eigen::Index>(k) * st.rows_per_step;
      const FeatureMatrix f = st.features.middleRows(r0, st.rows_per_step);
      const std::span<const std::uint8_t> m(st.mask.data() + r0, static_cast<std::size_t>(st.rows_per_step));
      expected += policy_backward(policy.nets[0], f, m, st.action[k], -r.advantage[k] / steps);
    }
  }
  CHECK(rel_error(loss.policy_grad.flatten(), expected.flatten()) < 1e-10);

  auto zero_adv = batch;
  for (auto& r : zero_adv) std::fill(r.advantage.begin(), r.advantage.end(), 0.0);
  for (double x : ppo_loss_and_grad(policy, critic, zero_adv, 0.25).policy_grad.flatten()) {
    CHECK(x == 0.0);
  }
}

TEST_CASE("advantage normalization") {
  Rng rng(23);
  const PolicyBundle policy = PolicyBundle::random(ProblemKind::kKnapsack, rng);
  auto batch = make_batch(ProblemKind::kKnapsack, 5, 9, policy, rng);
  normalize_advantages(batch);
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const auto& r : batch) {
    for (double a : r.advantage) {
      sum += a;
      sq += a * a;
      n += 1.0;
    }
  }
  CHECK(std::abs(sum / n) < 1e-12);
  CHECK(sq / n == doctest::Approx(1.0));
}

TEST_CASE("ppo epoch") {
  TrainConfig c = tiny_config(ProblemKind::kTsp, Trainer::kPpo);
  Rng rng(3);
  const PolicyBundle start = PolicyBundle::random(ProblemKind::kTsp, rng);
  const MlpParams critic0 = make_critic(ProblemKind::kTsp, rng);

  PpoConfig frozen = c.ppo;
  frozen.lr = 0.0;
  frozen.batch = c.batch;
  PolicyBundle p = start;
  MlpParams cr = critic0;
  PpoState st;
  const EpochStats stats = ppo_epoch(p, cr, st, c.task(), frozen, 5, 1);
  CHECK(p.flatten() == start.flatten());
  CHECK(cr.flatten() == critic0.flatten());
  CHECK(stats.mean_best_energy > 0.0);
  CHECK(stats.mean_acceptance_rate > 0.0);

  PpoConfig live = c.ppo;
  live.batch = c.batch;
  PolicyBundle a = start, b = start;
  MlpParams ca = critic0, cb = critic0;
  PpoState sa, sb;
  ppo_epoch(a, ca, sa, c.task(), live, 6, 1);
  ppo_epoch(b, cb, sb, c.task(), live, 6, 4);
  CHECK(a.flatten() == b.flatten());
  CHECK(ca.flatten() == cb.flatten());
  CHECK(a.flatten() != start.flatten());

  // One Adam step per minibatch per pass; more minibatches than rollouts
  // degrade to one rollout each.
  for (int minibatches : {1, 3, 100}) {
    PpoConfig mb = live;
    mb.minibatches = minibatches;
    PolicyBundle m = start;
    MlpParams cm = critic0;
    PpoState sm;
    ppo_epoch(m, cm, sm, c.task(), mb, 6, 1);
    CHECK(sm.policy.step == std::min(minibatches, c.batch) * mb.update_epochs);
    CHECK(sm.critic.step == sm.policy.step);
  }
}

// ------------------------------------------------------------------- trainer

TEST_CASE("training config defaults and overrides") {
  const auto k = TrainConfig::defaults(ProblemKind::kKnapsack, Trainer::kPpo);
  CHECK(k.ppo.lr == 2e-4);
  CHECK(k.ppo.gamma == 0.9);
  CHECK(k.ppo.clip_eps == 0.25);
  CHECK(k.ppo.weight_decay == 1e-2);
  CHECK(k.ppo.update_epochs == 4);
  CHECK(k.ppo.minibatches == 4);
  CHECK(k.ppo.decoupled_weight_decay);
  CHECK(k.steps == 100);
  CHECK(TrainConfig::defaults(ProblemKind::kTsp, Trainer::kEs).epochs == 10000);
  CHECK(TrainConfig::defaults(ProblemKind::kTsp, Trainer::kPpo).steps == 40);

  TrainConfig c = k;
  c.apply(nlohmann::json{{"epochs", 7}, {"lr", 1e-3}, {"n", 20}, {"minibatches", 1}});
  CHECK(c.epochs == 7);
  CHECK(c.ppo.minibatches == 1);
  CHECK(c.ppo.lr == 1e-3);
  CHECK(c.size == 20);
  CHECK_THROWS_AS(c.apply(nlohmann::json{{"learning_rate", 1}}), ConfigError);
  CHECK_THROWS_AS(c.apply(nlohmann::json{{"problem", "tsp"}}), ConfigError);
  CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());

  TrainConfig bad = k;
  bad.tk = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero epochs leave the initialization") {
  TrainConfig c = tiny_config(ProblemKind::kKnapsack, Trainer::kPpo);
  c.epochs = 0;
  const Checkpoint trained = train(c, 4, 1);
  const Checkpoint init = init_checkpoint(c, 4);
  CHECK(trained.epochs_completed == 0);
  CHECK(checkpoint_to_json(trained) == checkpoint_to_json(init));
  CHECK(checkpoint_to_json(trained)["config"] == c.to_json());
}

TEST_CASE("resuming from a saved checkpoint equals training straight through") {
  for (Trainer trainer : {Trainer::kEs, Trainer::kPpo}) {
    for (ProblemKind kind : {ProblemKind::kKnapsack, ProblemKind::kRosenbrock}) {
      const TrainConfig c = tiny_config(kind, trainer);
      Checkpoint straight = init_checkpoint(c, 8);
      train_epochs(straight, 3, 1);

      Checkpoint first = init_checkpoint(c, 8);
      train_epochs(first, 1, 1);
      Checkpoint resumed = checkpoint_from_json(
          nlohmann::json::parse(checkpoint_to_json(first).dump()));
      train_epochs(resumed, 2, 2);
      CHECK(resumed.epochs_completed == 3);
      CHECK(checkpoint_to_json(resumed).dump() == checkpoint_to_json(straight).dump());
    }
  }
}

TEST_CASE("ppo improves Knap50 over the first epochs") {
  // Mean best value of epochs 46-50 against epochs 1-5, majority of 3 seeds.
  int improved = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const TrainConfig c = TrainConfig::defaults(ProblemKind::kKnapsack, Trainer::kPpo);
    Checkpoint ckpt = init_checkpoint(c, seed);
    std::vector<double> values;
    train_epochs(ckpt, 50, 1, [&](const CurveRow& row, const EpochStats&) {
      values.push_back(-row.mean_best_energy);
    });
    double early = 0.0, late = 0.0;
    for (int e = 0; e < 5; ++e) {
      early += values[static_cast<std::size_t>(e)];
      late += values[values.size() - 1 - static_cast<std::size_t>(e)];
    }
    improved += late > early ? 1 : 0;
  }
  CHECK(improved >= 2);
}
