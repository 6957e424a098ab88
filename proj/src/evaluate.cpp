#include "nsa/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nsa/error.hpp"

namespace nsa {

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::kGreedy ? "greedy" : "sampled";
}

SamplingMode mode_from_string(std::string_view name) {
  if (name == "sampled") return SamplingMode::kSampled;
  if (name == "greedy") return SamplingMode::kGreedy;
  throw UsageError("unknown mode '" + std::string(name) +
                   "' (expected sampled or greedy)");
}

double reported_value(ProblemKind problem, double best_energy) {
  return problem == ProblemKind::kKnapsack ? -best_energy : best_energy;
}

EvalReport evaluate(const Policy& policy, const Dataset& dataset,
                    const EvalOptions& options) {
  if (const auto* b = std::get_if<PolicyBundle>(&policy)) {
    if (b->problem != dataset.problem) {
      throw ConfigError("policy for " + std::string(to_string(b->problem)) +
                        " cannot evaluate a " +
                        std::string(to_string(dataset.problem)) + " dataset");
    }
  }
  if (options.run_seeds.empty()) throw UsageError("at least one run seed is required");
  EvalReport r;
  r.problem = dataset.problem;
  r.size = dataset.size;
  r.instances = static_cast<int>(dataset.instances.size());
  r.multiplier = options.multiplier;
  r.mode = options.mode;
  r.trainer = options.trainer;
  r.t0 = options.t0;
  r.tk = options.tk;
  r.run_seeds = options.run_seeds;
  r.steps = rollout_length(dataset.problem, dataset.size, options.multiplier,
                           options.rosenbrock_steps);
  const TemperatureSchedule schedule =
      TemperatureSchedule::make(options.t0, options.tk, r.steps);
  AnnealOptions anneal_options;
  anneal_options.keep_records = false;

  const auto start = std::chrono::steady_clock::now();
  r.instance_min = std::numeric_limits<double>::infinity();
  r.instance_max = -std::numeric_limits<double>::infinity();
  double acceptance = 0.0;
  for (const std::uint64_t seed : options.run_seeds) {
    const auto trajs = batch_anneal(dataset.instances, policy, schedule,
                                    options.mode, seed, anneal_options,
                                    options.workers);
    double sum = 0.0;
    for (const auto& t : trajs) {
      const double v = reported_value(dataset.problem, t.best_energy);
      sum += v;
      r.instance_min = std::min(r.instance_min, v);
      r.instance_max = std::max(r.instance_max, v);
      acceptance += t.acceptance_rate();
    }
    r.run_means.push_back(trajs.empty() ? 0.0 : sum / static_cast<double>(trajs.size()));
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - start)
                  .count();

  const double runs = static_cast<double>(r.run_means.size());
  for (double m : r.run_means) r.mean += m;
  r.mean /= runs;
  double var = 0.0;
  for (double m : r.run_means) var += (m - r.mean) * (m - r.mean);
  r.std = std::sqrt(var / runs);
  const double rollouts = runs * static_cast<double>(dataset.instances.size());
  r.acceptance_rate = rollouts > 0 ? acceptance / rollouts : 0.0;
  return r;
}

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& dataset,
                    EvalOptions options) {
  if (ckpt.config.problem != dataset.problem) {
    throw ConfigError("checkpoint trained on " +
                      std::string(to_string(ckpt.config.problem)) +
                      " cannot evaluate a " +
                      std::string(to_string(dataset.problem)) + " dataset");
  }
  options.t0 = ckpt.config.t0;
  options.tk = ckpt.config.tk;
  options.trainer = std::string(to_string(ckpt.config.trainer));
  if (dataset.problem == ProblemKind::kRosenbrock) {
    options.rosenbrock_steps = ckpt.config.steps;
  }
  return evaluate(Policy{ckpt.policy}, dataset, options);
}

double gap(double value, double reference, Sense sense) {
  if (reference == 0.0) throw OutOfRange("gap reference must be non-zero");
  const double diff = sense == Sense::kMax ? reference - value : value - reference;
  return diff / reference * 100.0;
}

Sense sense_of(ProblemKind problem) {
  return problem == ProblemKind::kKnapsack ? Sense::kMax : Sense::kMin;
}

std::string results_csv_header() {
  return "problem,N,K,mode,trainer,seed,mean,std,acc_rate,wall_ms";
}

namespace {

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(seeds[i]);
  }
  return out;
}

}  // namespace

std::string results_csv_row(const EvalReport& r, bool timing) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%d,%s,%s,%s,%.17g,%.17g,%.17g,%.3f",
                std::string(to_string(r.problem)).c_str(), r.size, r.steps,
                std::string(to_string(r.mode)).c_str(), r.trainer.c_str(),
                join_seeds(r.run_seeds).c_str(), r.mean, r.std,
                r.acceptance_rate, timing ? r.wall_ms : 0.0);
  return buf;
}

nlohmann::json report_to_json(const EvalReport& r, bool timing) {
  return {{"problem", std::string(to_string(r.problem))},
          {"N", r.size},
          {"K", r.steps},
          {"instances", r.instances},
          {"multiplier", r.multiplier},
          {"mode", std::string(to_string(r.mode))},
          {"trainer", r.trainer},
          {"t0", r.t0},
          {"tk", r.tk},
          {"run_seeds", r.run_seeds},
          {"run_means", r.run_means},
          {"mean", r.mean},
          {"std", r.std},
          {"acc_rate", r.acceptance_rate},
          {"instance_min", r.instance_min},
          {"instance_max", r.instance_max},
          {"wall_ms", timing ? r.wall_ms : 0.0}};
}

std::vector<double> acceptance_curve(std::span<const Trajectory> trajs,
                                     int buckets) {
  if (buckets < 1) throw OutOfRange("bucket count must be positive");
  std::vector<double> accepted(static_cast<std::size_t>(buckets), 0.0);
  std::vector<double> total(static_cast<std::size_t>(buckets), 0.0);
  for (const auto& t : trajs) {
    const auto steps = static_cast<long long>(t.records.size());
    for (long long k = 0; k < steps; ++k) {
      const auto b = static_cast<std::size_t>(k * buckets / steps);
      total[b] += 1.0;
      if (t.records[static_cast<std::size_t>(k)].accepted) accepted[b] += 1.0;
    }
  }
  for (std::size_t b = 0; b < accepted.size(); ++b) {
    accepted[b] = total[b] > 0 ? accepted[b] / total[b] : 0.0;
  }
  return accepted;
}

std::string acceptance_curve_csv(std::span<const Trajectory> trajs,
                                 int buckets) {
  const auto curve = acceptance_curve(trajs, buckets);
  std::string out = "bucket,acceptance_rate\n";
  char buf[64];
  for (std::size_t b = 0; b < curve.size(); ++b) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", b, curve[b]);
    out += buf;
  }
  return out;
}

std::vector<std::string> feature_names(ProblemKind problem, int net) {
  switch (problem) {
    case ProblemKind::kKnapsack:
      return {"x", "w", "v", "W", "T"};
    case ProblemKind::kBinPacking:
      return net == 0 ? std::vector<std::string>{"w", "c_bin", "T"}
                      : std::vector<std::string>{"w_item", "c", "T"};
    case ProblemKind::kTsp:
      if (net == 0) return {"px", "py", "cx", "cy", "sx", "sy", "T"};
      return {"ipx", "ipy", "icx", "icy", "isx", "isy",
              "jpx", "jpy", "jcx", "jcy", "jsx", "jsy", "T"};
    case ProblemKind::kRosenbrock:
      return {"x0", "x1"};
  }
  return {};
}

std::string export_policy_logits(const PolicyBundle& policy, int net,
                                 std::span<const double> base,
                                 const GridAxis& a, const GridAxis& b) {
  if (net < 0 || static_cast<std::size_t>(net) >= policy.nets.size()) {
    throw OutOfRange("policy has no net " + std::to_string(net));
  }
  const MlpParams& params = policy.nets[static_cast<std::size_t>(net)];
  const int width = params.in();
  if (static_cast<int>(base.size()) != width) {
    throw ShapeError("base feature row has the wrong width");
  }
  for (const GridAxis* ax : {&a, &b}) {
    if (ax->feature < 0 || ax->feature >= width || ax->count < 1) {
      throw OutOfRange("invalid grid axis");
    }
  }
  const auto names = feature_names(policy.problem, net);
  std::string out;
  for (const auto& n : names) out += n + ",";
  for (int o = 0; o < params.out(); ++o) {
    out += (params.out() == 1 ? std::string("logit") : "out" + std::to_string(o));
    out += o + 1 < params.out() ? "," : "\n";
  }
  auto at = [](const GridAxis& ax, int i) {
    return ax.count == 1 ? ax.lo : ax.lo + (ax.hi - ax.lo) * i / (ax.count - 1);
  };
  std::vector<double> row(base.begin(), base.end());
  char buf[64];
  for (int i = 0; i < a.count; ++i) {
    for (int j = 0; j < b.count; ++j) {
      row[static_cast<std::size_t>(a.feature)] = at(a, i);
      row[static_cast<std::size_t>(b.feature)] = at(b, j);
      const Eigen::VectorXd y = mlp_forward(params, row);
      for (double v : row) {
        std::snprintf(buf, sizeof(buf), "%.17g,", v);
        out += buf;
      }
      for (Eigen::Index o = 0; o < y.size(); ++o) {
        std::snprintf(buf, sizeof(buf), "%.17g%s", y(o), o + 1 < y.size() ? "," : "\n");
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace nsa
