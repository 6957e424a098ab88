#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nsa/anneal.hpp"
#include "nsa/baselines.hpp"
#include "nsa/categorical.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/mlp.hpp"
#include "nsa/policy.hpp"
#include "nsa/rng.hpp"

using namespace nsa;

namespace {

FeatureMatrix random_features(Rng& rng, int rows, int cols) {
  FeatureMatrix f(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) f(r, c) = rng.uniform(-1.0, 1.0);
  }
  return f;
}

MlpParams random_net(Rng& rng, int in, int out) {
  MlpParams p = MlpParams::random(in, out, rng);
  // Non-zero biases so the ReLU boundary is not aligned with the origin.
  for (int i = 0; i < p.b1.size(); ++i) p.b1[i] = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < p.b2.size(); ++i) p.b2[i] = rng.uniform(-0.5, 0.5);
  return p;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

template <class F>
std::vector<double> central_difference(MlpParams p, F&& f, double h = 1e-5) {
  std::vector<double> flat = p.flatten();
  std::vector<double> grad(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + h;
    p.assign(flat);
    const double up = f(p);
    flat[i] = keep - h;
    p.assign(flat);
    const double down = f(p);
    flat[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double log_prob(const MlpParams& p, const FeatureMatrix& f, const Mask& mask, int action) {
  const Eigen::VectorXd z = pointwise_logits(p, f);
  const std::vector<double> logits(z.data(), z.data() + z.size());
  return std::log(masked_softmax(logits, mask)[static_cast<std::size_t>(action)]);
}

}  // namespace

// ----------------------------------------------------------------------- MLP

TEST_CASE("mlp_forward") {
  const auto zero = MlpParams::zeros(3, 2);
  const std::vector<double> x{0.3, -1.0, 2.0};
  CHECK(mlp_forward(zero, x).isZero(0.0));

  // One hidden unit reading input 0, passed straight to the output.
  MlpParams pass = MlpParams::zeros(3, 1);
  pass.w1(0, 0) = 1.0;
  pass.w2(0, 0) = 1.0;
  CHECK(mlp_forward(pass, x)[0] == 0.3);

  Rng rng(1);
  const MlpParams p = random_net(rng, 4, 2);
  const std::vector<double> in{0.1, -0.4, 0.7, 0.25};
  // Explicit loops as an independent matrix-arithmetic reference.
  std::vector<double> hidden(kHiddenUnits);
  for (int h = 0; h < kHiddenUnits; ++h) {
    double a = p.b1[h];
    for (int c = 0; c < 4; ++c) a += p.w1(h, c) * in[static_cast<std::size_t>(c)];
    hidden[static_cast<std::size_t>(h)] = std::max(0.0, a);
  }
  const Eigen::VectorXd out = mlp_forward(p, in);
  for (int o = 0; o < 2; ++o) {
    double y = p.b2[o];
    for (int h = 0; h < kHiddenUnits; ++h) y += p.w2(o, h) * hidden[static_cast<std::size_t>(h)];
    CHECK(std::abs(out[o] - y) < 1e-12);
  }

  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("parameter counts") {
  CHECK(MlpParams::zeros(5, 1).parameter_count() == 16 * 5 + 16 + 16 + 1);
  CHECK(PolicyBundle::zeros(ProblemKind::kKnapsack).parameter_count() == 113);
  CHECK(PolicyBundle::zeros(ProblemKind::kBinPacking).parameter_count() == 2 * 81);
  CHECK(PolicyBundle::zeros(ProblemKind::kTsp).parameter_count() == 145 + 241);
  CHECK(PolicyBundle::zeros(ProblemKind::kRosenbrock).parameter_count() == 82);
}

TEST_CASE("pointwise kernels agree with the row loop") {
  Rng rng(2);
  const std::pair<int, int> shapes[] = {{5, 1}, {3, 1}, {7, 1}, {13, 1}, {2, 2}, {2, 1}, {4, 3}};
  for (auto [in, out] : shapes) {
    const MlpParams p = random_net(rng, in, out);
    for (int rows : {1, 3, 8, 17}) {
      const FeatureMatrix f = random_features(rng, rows, in);
      Eigen::MatrixXd batch;
      pointwise_outputs(p, f, batch);
      PointwiseForward fwd;
      fwd.run(p, f);
      for (int r = 0; r < rows; ++r) {
        const std::vector<double> row(f.row(r).data(), f.row(r).data() + in);
        const Eigen::VectorXd y = mlp_forward(p, row);
        for (int o = 0; o < out; ++o) {
          CHECK(std::abs(batch(r, o) - y[o]) < 1e-12);
          CHECK(std::abs(fwd.output(r, o) - y[o]) < 1e-12);
        }
      }

      Eigen::MatrixXd upstream(rows, out);
      for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < out; ++o) upstream(r, o) = r % 3 == 1 ? 0.0 : rng.uniform(-1, 1);
      }
      MlpParams g1 = MlpParams::zeros(in, out);
      MlpParams g2 = MlpParams::zeros(in, out);
      mlp_backward_accumulate(p, f, fwd, upstream, g1);
      pointwise_backward(p, f, upstream, g2);
      CHECK(rel_error(g1.flatten(), g2.flatten()) < 1e-12);
    }
  }
}

TEST_CASE("pointwise logits are permutation equivariant") {
  Rng rng(3);
  const MlpParams p = random_net(rng, 5, 1);
  const FeatureMatrix f = random_features(rng, 9, 5);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[6]);
  FeatureMatrix g(9, 5);
  for (int r = 0; r < 9; ++r) g.row(r) = f.row(perm[static_cast<std::size_t>(r)]);
  const Eigen::VectorXd zf = pointwise_logits(p, f);
  const Eigen::VectorXd zg = pointwise_logits(p, g);
  for (int r = 0; r < 9; ++r) CHECK(zg[r] == zf[perm[static_cast<std::size_t>(r)]]);
}

// --------------------------------------------------------------- categorical

TEST_CASE("masked_softmax closed forms") {
  auto p = masked_softmax(std::vector<double>{0, 0, 0}, Mask{1, 1, 1});
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  p = masked_softmax(std::vector<double>{std::log(2.0), 0.0}, Mask{1, 1});
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  p = masked_softmax(std::vector<double>{5, 1, 9}, Mask{1, 0, 1});
  const double z = std::exp(5.0) + std::exp(9.0);
  CHECK(p[0] == doctest::Approx(std::exp(5.0) / z).epsilon(1e-14));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == doctest::Approx(std::exp(9.0) / z).epsilon(1e-14));

  // Large logits stay finite thanks to the max shift.
  p = masked_softmax(std::vector<double>{1000, 999}, Mask{1, 1});
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] + p[1] == doctest::Approx(1.0));

  CHECK_THROWS_AS(masked_softmax(std::vector<double>{1, 2}, Mask{0, 0}), DegenerateMask);
}

TEST_CASE("action selection") {
  const std::vector<double> degenerate{1.0, 0.0, 0.0};
  CHECK(choose_action(degenerate, SamplingMode::kSampled, 0.999).index == 0);
  CHECK(choose_action(degenerate, SamplingMode::kGreedy, 0.0).index == 0);

  const std::vector<double> probs{0.2, 0.5, 0.3};
  CHECK(choose_action(probs, SamplingMode::kGreedy, 0.0).index == 1);
  CHECK(choose_action(std::vector<double>{0.5, 0.5}, SamplingMode::kGreedy, 0.0).index == 0);
  const Choice c = choose_action(probs, SamplingMode::kSampled, 0.75);
  CHECK(c.index == 2);
  CHECK(c.log_prob == std::log(0.3));

  Rng rng(5);
  const int n = 100000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_action(probs, SamplingMode::kSampled, rng).index)];
  for (std::size_t i = 0; i < 3; ++i) {
    const double tol = 4.0 * std::sqrt(probs[i] * (1 - probs[i]) / n);
    CHECK(std::abs(static_cast<double>(counts[i]) / n - probs[i]) <= tol);
  }

  // Masked entries are never drawn, even at u just below 1.
  CHECK(choose_action(std::vector<double>{0.5, 0.5, 0.0}, SamplingMode::kSampled,
                      std::nextafter(1.0, 0.0)).index == 1);
}

// ------------------------------------------------------------------ features

TEST_CASE("knapsack features") {
  const Dataset d = generate_knapsack(6, 1, 1);
  const auto& inst = std::get<KnapsackInstance>(d.instances[0]);
  auto sol = knapsack_initial(inst);
  FeatureMatrix f = knapsack_features(inst, sol, 0.7);
  CHECK(f.cols() == 5);
  CHECK(f.col(0).isZero(0.0));
  for (int r = 0; r < 6; ++r) {
    CHECK(f(r, 3) == inst.capacity);
    CHECK(f(r, 4) == 0.7);
  }
  apply_knapsack_flip(inst, sol, 2);
  f = knapsack_features(inst, sol, 0.7);
  CHECK(f(2, 0) == 1.0);
  CHECK(f(2, 1) == inst.weights[2]);
  CHECK(f(2, 2) == inst.values[2]);
}

TEST_CASE("bin packing features") {
  const Dataset d = generate_binpacking(5, 1, 1);
  const auto& inst = std::get<BinPackingInstance>(d.instances[0]);
  const auto sol = binpacking_initial(inst);
  const FeatureMatrix items = binpacking_features(inst, sol, 0.3, Stage::kFirst);
  for (int r = 0; r < 5; ++r) {
    CHECK(items(r, 0) == inst.weights[static_cast<std::size_t>(r)]);
    CHECK(items(r, 1) == doctest::Approx(inst.capacity - inst.weights[static_cast<std::size_t>(r)]));
    CHECK(items(r, 2) == 0.3);
  }
  const FeatureMatrix binsf = binpacking_features(inst, sol, 0.3, Stage::kSecond, 3);
  for (int r = 0; r < 5; ++r) {
    CHECK(binsf(r, 0) == inst.weights[3]);
    CHECK(binsf(r, 1) == sol.free_capacity[static_cast<std::size_t>(r)]);
  }
  CHECK_THROWS_AS(binpacking_features(inst, sol, 0.3, Stage::kSecond), ShapeError);
}

TEST_CASE("tsp features") {
  TspInstance inst;
  inst.coords = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  const auto tour = make_tour(inst, {0, 1, 2, 3});
  const FeatureMatrix f = tsp_features(inst, tour, 0.5, Stage::kFirst);
  // City 1: predecessor 0, successor 2.
  const double row1[] = {0, 0, 1, 0, 1, 1, 0.5};
  for (int c = 0; c < 7; ++c) CHECK(f(1, c) == row1[c]);
  const FeatureMatrix s = tsp_features(inst, tour, 0.5, Stage::kSecond, 0);
  // Chosen city 0 (pred 3, succ 1), candidate city 2 (pred 1, succ 3).
  const double row2[] = {0, 1, 0, 0, 1, 0, 1, 0, 1, 1, 0, 1, 0.5};
  for (int c = 0; c < 13; ++c) CHECK(s(2, c) == row2[c]);

  const auto rotated = make_tour(inst, {2, 3, 0, 1});
  CHECK(tsp_features(inst, rotated, 0.5, Stage::kFirst) == f);
}

// ------------------------------------------------------------ Gaussian head

TEST_CASE("gaussian sigma") {
  const auto zero = MlpParams::zeros(2, 2);
  const auto s = gaussian_sigma(zero, {0.3, -0.2});
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 1.0);

  MlpParams big = MlpParams::zeros(2, 2);
  big.b2 << 50.0, -50.0;
  const auto clamped = gaussian_sigma(big, {0.0, 0.0});
  CHECK(clamped[0] == std::exp(3.0));
  CHECK(clamped[1] == std::exp(-10.0));

  const std::array<double, 2> sig{0.5, 2.0};
  const std::array<double, 2> step{0.1, -1.0};
  const double expected = -0.5 * (0.01 / 0.25 + 1.0 / 4.0) -
                          std::log(0.5) - std::log(2.0) - std::log(2.0 * M_PI);
  CHECK(gaussian_log_density(sig, step) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gaussian samples match sigma") {
  // With zero parameters sigma is 1 at every state.
  const auto policy = PolicyBundle::zeros(ProblemKind::kRosenbrock);
  const auto schedule = TemperatureSchedule::make(1.0, 0.01, 50000);
  const auto t = anneal(Instance{RosenbrockInstance{}}, policy, schedule,
                        SamplingMode::kSampled, 3);
  double sq0 = 0.0, sq1 = 0.0;
  for (const auto& r : t.records) {
    sq0 += r.action.step[0] * r.action.step[0];
    sq1 += r.action.step[1] * r.action.step[1];
  }
  const double n = static_cast<double>(t.records.size());
  const double tol = 4.0 * std::sqrt(2.0 / n);
  CHECK(std::abs(sq0 / n - 1.0) < tol);
  CHECK(std::abs(sq1 / n - 1.0) < tol);
}

// ------------------------------------------------------------------ gradients

TEST_CASE("policy_backward matches finite differences") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 2 + static_cast<int>(rng.below(5));
    const int in = 2 + static_cast<int>(rng.below(4));
    const MlpParams p = random_net(rng, in, 1);
    const FeatureMatrix f = random_features(rng, rows, in);
    Mask mask(static_cast<std::size_t>(rows));
    for (auto& m : mask) m = rng.uniform() < 0.7;
    mask[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(rows)))] = 1;
    int action = static_cast<int>(rng.below(static_cast<std::uint64_t>(rows)));
    while (!mask[static_cast<std::size_t>(action)]) action = (action + 1) % rows;
    const double upstream = rng.uniform(-2.0, 2.0);

    const MlpParams g = policy_backward(p, f, mask, action, upstream);
    const auto fd = central_difference(p, [&](const MlpParams& q) {
      return upstream * log_prob(q, f, mask, action);
    });
    CHECK(rel_error(g.flatten(), fd) <= 1e-5);
  }
}

TEST_CASE("policy_backward with zero upstream") {
  Rng rng(9);
  const MlpParams p = random_net(rng, 3, 1);
  const FeatureMatrix f = random_features(rng, 4, 3);
  const MlpParams g = policy_backward(p, f, Mask{1, 1, 0, 1}, 1, 0.0);
  for (double x : g.flatten()) CHECK(x == 0.0);
}

TEST_CASE("gaussian_backward matches finite differences") {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const MlpParams p = random_net(rng, 2, 2);
    const RosenbrockPoint x{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const std::array<double, 2> step{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double upstream = rng.uniform(-2, 2);
    const MlpParams g = gaussian_backward(p, x, step, upstream);
    const auto fd = central_difference(p, [&](const MlpParams& q) {
      return upstream * gaussian_log_density(gaussian_sigma(q, x), step);
    });
    CHECK(rel_error(g.flatten(), fd) <= 1e-5);
  }
}

// --------------------------------------------------------------------- critic

TEST_CASE("critic value") {
  Rng rng(12);
  const FeatureMatrix f = random_features(rng, 5, 5);
  CHECK(critic_value(zero_critic(ProblemKind::kKnapsack), f) == 0.0);

  const MlpParams c = make_critic(ProblemKind::kKnapsack, rng);
  const FeatureMatrix one = f.topRows(1);
  const std::vector<double> row(one.data(), one.data() + 5);
  CHECK(critic_value(c, one) == doctest::Approx(mlp_forward(c, row)[0]).epsilon(1e-14));

  FeatureMatrix flipped = f.colwise().reverse();
  CHECK(critic_value(c, flipped) == doctest::Approx(critic_value(c, f)).epsilon(1e-14));
}

// ------------------------------------------------------- zero-initialized nets

TEST_CASE("zero policy proposes uniformly") {
  Rng rng(13);
  const MlpParams zero = MlpParams::zeros(5, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(12));
    Mask mask(static_cast<std::size_t>(rows));
    for (auto& m : mask) m = rng.uniform() < 0.6;
    mask[0] = 1;
    const Eigen::VectorXd z = pointwise_logits(zero, random_features(rng, rows, 5));
    const auto p = masked_softmax(std::vector<double>(z.data(), z.data() + rows), mask);
    std::vector<double> u(static_cast<std::size_t>(rows));
    uniform_masked(mask, u);
    for (int r = 0; r < rows; ++r) CHECK(std::abs(p[static_cast<std::size_t>(r)] - u[static_cast<std::size_t>(r)]) <= 1e-12);
  }
}
