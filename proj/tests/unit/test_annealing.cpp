#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "nsa/anneal.hpp"
#include "nsa/baselines.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/rng.hpp"
#include "nsa/schedule.hpp"

using namespace nsa;

TEST_CASE("compute_alpha closed form") {
  CHECK(compute_alpha(1.0, 1.0, 100) == 1.0);
  CHECK(compute_alpha(1.0, 0.1, 100) == doctest::Approx(0.9772372209558107).epsilon(1e-14));
  CHECK(compute_alpha(1.0, 0.01, 40) == doctest::Approx(0.8912509381337456).epsilon(1e-14));
  for (int k : {1, 7, 100, 1000, 20000}) {
    const double a = compute_alpha(2.0, 1e-4, k);
    CHECK(std::abs(2.0 * std::pow(a, k) - 1e-4) / 1e-4 < 1e-9);
  }
}

TEST_CASE("compute_alpha rejects bad schedules") {
  CHECK_THROWS_AS(compute_alpha(0.0, 0.1, 10), InvalidSchedule);
  CHECK_THROWS_AS(compute_alpha(1.0, -0.1, 10), InvalidSchedule);
  CHECK_THROWS_AS(compute_alpha(0.1, 1.0, 10), InvalidSchedule);
  CHECK_THROWS_AS(compute_alpha(1.0, 0.1, 0), InvalidSchedule);
}

TEST_CASE("temperature_at") {
  const auto s = TemperatureSchedule::make(1.0, 0.1, 100);
  CHECK(temperature_at(s, 0) == 1.0);
  CHECK(std::abs(temperature_at(s, 100) - 0.1) < 1e-9);
  CHECK(temperature_at(s, 50) == doctest::Approx(0.31622776601683794).epsilon(1e-12));
  CHECK_THROWS_AS(temperature_at(s, 101), OutOfRange);
  CHECK_THROWS_AS(temperature_at(s, -1), OutOfRange);
}

TEST_CASE("mh_accept boundary cases") {
  CHECK(mh_accept(-0.5, 1.0, 0.999));
  CHECK(mh_accept(std::log(2.0), 1.0, 0.499));
  CHECK_FALSE(mh_accept(std::log(2.0), 1.0, 0.501));
  CHECK(mh_accept(0.0, 0.01, 0.9999));
  CHECK(mh_accept(-1.0, 1e-310, 0.5));
  CHECK_FALSE(mh_accept(1e-12, 1e-310, 0.0));
}

TEST_CASE("mh_accept empirical frequency") {
  Rng rng(2024);
  const int draws = 100000;
  const double deltas[] = {0.01, 0.1, 0.5, 1.0, 2.0};
  const double temps[] = {0.1, 1.0, 3.0, 10.0};
  for (double d : deltas) {
    for (double t : temps) {
      const double p = std::min(1.0, std::exp(-d / t));
      int hits = 0;
      for (int i = 0; i < draws; ++i) hits += mh_accept(d, t, rng.uniform()) ? 1 : 0;
      const double tol = 4.0 * std::sqrt(p * (1.0 - p) / draws);
      CHECK(std::abs(static_cast<double>(hits) / draws - p) <= tol);
    }
  }
}

TEST_CASE("rng streams") {
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform_left();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    CHECK(r.below(7) < 7u);
  }

  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(5, i));
  CHECK(seeds.size() == 1000);
  CHECK(derive_seed(5, 0) != derive_seed(6, 0));
}

TEST_CASE("normal_pair moments") {
  Rng r(11);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n / 2; ++i) {
    for (double z : r.normal_pair()) {
      sum += z;
      sq += z * z;
    }
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

namespace {

KnapsackInstance heavy_knapsack() {
  KnapsackInstance inst;
  inst.weights = {2.0, 3.0, 4.0};
  inst.values = {1.0, 1.0, 1.0};
  inst.capacity = 1.0;
  return inst;
}

}  // namespace

TEST_CASE("anneal reports the step of a degenerate state") {
  const auto s = TemperatureSchedule::make(1.0, 0.1, 5);
  try {
    anneal(Instance{heavy_knapsack()}, UniformPolicy{}, s, SamplingMode::kSampled, 1);
    FAIL("expected DegenerateState");
  } catch (const DegenerateState& e) {
    CHECK(e.step() == 0);
  }
}

TEST_CASE("near-zero temperature rejects every uphill move") {
  const auto s = TemperatureSchedule::make(1e-12, 1e-12, 400);
  for (ProblemKind kind : {ProblemKind::kKnapsack, ProblemKind::kBinPacking,
                           ProblemKind::kTsp}) {
    const Dataset d = generate_dataset(kind, 8, 3, 9);
    for (std::size_t i = 0; i < d.instances.size(); ++i) {
      const Trajectory t = anneal(d.instances[i], uniform_policy(kind), s,
                                  SamplingMode::kSampled, i);
      REQUIRE(t.records.size() == 400);
      for (const auto& r : t.records) {
        if (r.proposed_delta > 0.0) CHECK_FALSE(r.accepted);
      }
    }
  }
}

TEST_CASE("trajectory bookkeeping") {
  const Dataset d = generate_dataset(ProblemKind::kTsp, 10, 1, 4);
  const auto s = TemperatureSchedule::make(1.0, 0.01, 300);
  AnnealOptions opt;
  opt.check_deltas = true;
  const Trajectory t = anneal(d.instances[0], uniform_policy(ProblemKind::kTsp), s,
                              SamplingMode::kSampled, 17, opt);
  CHECK(t.records.size() == 300);
  int accepted = 0;
  double best = t.initial_energy;
  for (const auto& r : t.records) {
    accepted += r.accepted ? 1 : 0;
    best = std::min(best, r.energy_after);
    CHECK(r.reward == doctest::Approx(r.energy_before - r.energy_after));
  }
  CHECK(accepted == t.acceptance_count);
  CHECK(best == t.best_energy);
  CHECK(std::abs(energy(d.instances[0], t.best_solution) - t.best_energy) < 1e-9);
  CHECK(std::abs(energy(d.instances[0], t.final_solution) - t.final_energy) < 1e-9);
}

TEST_CASE("vanilla Knap10 matches the scalar reference replay") {
  // Reference values from tests/oracles/replay.py, which re-implements the
  // generator stream and the annealing loop independently.
  const Dataset d = generate_knapsack(10, 1, 0);
  const auto s = TemperatureSchedule::make(1.0, 0.1, 100);
  const Trajectory t = anneal(d.instances[0], UniformPolicy{}, s,
                              SamplingMode::kSampled, 1);
  REQUIRE(t.records.size() == 100);
  CHECK(t.acceptance_count == 44);
  CHECK(t.records[0].energy_after == doctest::Approx(-0.40250533730532834).epsilon(1e-12));
  CHECK(t.records[1].energy_after == doctest::Approx(-0.496203945261402).epsilon(1e-12));
  CHECK_FALSE(t.records[2].accepted);
  CHECK(t.records[9].energy_after == doctest::Approx(-1.3046421431764714).epsilon(1e-12));
  CHECK(t.records[49].energy_after == doctest::Approx(-1.881097655673507).epsilon(1e-12));
  CHECK(t.best_energy == doctest::Approx(-2.4794637137676396).epsilon(1e-12));
  // Brute-force optimum of this instance is 2.6156038006694824.
  CHECK(t.best_energy >= -2.6156038006694824);
}

TEST_CASE("greedy mode is deterministic and seed independent") {
  const Dataset d = generate_knapsack(20, 1, 3);
  const auto s = TemperatureSchedule::make(1.0, 0.1, 60);
  const auto policy = PolicyBundle::zeros(ProblemKind::kKnapsack);
  const Trajectory a = anneal(d.instances[0], policy, s, SamplingMode::kGreedy, 1);
  const Trajectory b = anneal(d.instances[0], policy, s, SamplingMode::kGreedy, 1);
  CHECK(a.best_energy == b.best_energy);
  CHECK(a.acceptance_count == b.acceptance_count);
}

TEST_CASE("batch_anneal") {
  const auto s = TemperatureSchedule::make(1.0, 0.1, 50);
  const Dataset d = generate_binpacking(12, 8, 5);
  const Policy p = uniform_policy(ProblemKind::kBinPacking);

  CHECK(batch_anneal({}, p, s, SamplingMode::kSampled, 1).empty());

  const auto one = batch_anneal(std::span(d.instances).first(1), p, s,
                                SamplingMode::kSampled, 9);
  const auto scalar = anneal(d.instances[0], p, s, SamplingMode::kSampled,
                             derive_seed(9, 0));
  CHECK(one[0].best_energy == scalar.best_energy);
  CHECK(one[0].final_energy == scalar.final_energy);

  const auto serial = batch_anneal(d.instances, p, s, SamplingMode::kSampled, 9, {}, 1);
  const auto threaded = batch_anneal(d.instances, p, s, SamplingMode::kSampled, 9, {}, 8);
  REQUIRE(serial.size() == threaded.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].best_energy == threaded[i].best_energy);
    CHECK(serial[i].acceptance_count == threaded[i].acceptance_count);
    for (std::size_t k = 0; k < serial[i].records.size(); ++k) {
      CHECK(serial[i].records[k].action.first == threaded[i].records[k].action.first);
      CHECK(serial[i].records[k].action.second == threaded[i].records[k].action.second);
    }
  }
}

TEST_CASE("batch_anneal attaches the failing index") {
  std::vector<Instance> batch;
  const Dataset d = generate_knapsack(5, 3, 1);
  batch.assign(d.instances.begin(), d.instances.end());
  batch.insert(batch.begin() + 2, Instance{heavy_knapsack()});
  try {
    batch_anneal(batch, UniformPolicy{}, TemperatureSchedule::make(1.0, 0.1, 5),
                 SamplingMode::kSampled, 1, {}, 2);
    FAIL("expected BatchError");
  } catch (const BatchError& e) {
    CHECK(e.index() == 2);
  }
}
