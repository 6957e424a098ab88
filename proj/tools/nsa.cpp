// Command-line front end: dataset generation, training, single-instance
// solving, evaluation, exact oracles, the fixed-sigma sweep and policy
// logit export.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsa/baselines.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/evaluate.hpp"
#include "nsa/oracles.hpp"
#include "nsa/parallel.hpp"
#include "nsa/serialize.hpp"
#include "nsa/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int resolve_workers(int flag) { return flag > 0 ? flag : nsa::default_workers(); }

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw nsa::UsageError("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  if (out.empty()) throw nsa::UsageError("empty list '" + text + "'");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw nsa::UsageError("expected a comma-separated number list, got '" + text + "'");
    }
  }
  return out;
}

// feature:lo:hi:count
nsa::GridAxis parse_axis(const std::string& text) {
  nsa::GridAxis ax;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d:%lf:%lf:%d%c", &ax.feature, &ax.lo, &ax.hi,
                  &ax.count, &tail) != 4) {
    throw nsa::UsageError("grid axis must look like feature:lo:hi:count, got '" + text + "'");
  }
  return ax;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    nsa::write_file_atomic(path, text);
  }
}

// --------------------------------------------------------------- generate

struct GenerateArgs {
  std::string problem;
  int n = 0;
  int count = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const nsa::ProblemKind kind = nsa::problem_from_string(a.problem);
  if (kind == nsa::ProblemKind::kRosenbrock) {
    throw nsa::UsageError("generate supports knapsack, binpacking and tsp");
  }
  if (a.count < 1) throw nsa::UsageError("--count must be positive");
  nsa::Dataset d;
  try {
    d = nsa::generate_dataset(kind, a.n, a.count, a.seed);
  } catch (const nsa::InvalidInstance& e) {
    throw nsa::UsageError(e.what());
  }
  write_text(a.out, nsa::dump_json(nsa::dataset_to_json(d)));
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string problem;
  std::string trainer = "ppo";
  std::string config;
  std::string resume;
  std::uint64_t seed = 0;
  std::optional<int> epochs;
  std::string out;
  std::string curve;
  int workers = 0;
  bool no_timing = false;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  nsa::Checkpoint ckpt;
  int count = 0;
  if (!a.resume.empty()) {
    ckpt = nsa::load_checkpoint(a.resume);
    if (!a.config.empty()) ckpt.config.apply(nsa::read_json(a.config));
    count = a.epochs ? *a.epochs : ckpt.config.epochs - ckpt.epochs_completed;
    // The echoed config always covers every epoch the checkpoint has seen.
    ckpt.config.epochs = std::max(ckpt.config.epochs, ckpt.epochs_completed + count);
  } else {
    nsa::TrainConfig config = nsa::TrainConfig::defaults(
        nsa::problem_from_string(a.problem), nsa::trainer_from_string(a.trainer));
    if (!a.config.empty()) config.apply(nsa::read_json(a.config));
    if (a.epochs) {
      config.epochs = *a.epochs;
      config.validate();
    }
    ckpt = nsa::init_checkpoint(config, a.seed);
    count = config.epochs;
  }
  if (count < 0) throw nsa::UsageError("epoch count must be non-negative");
  if (!a.quiet) std::cerr << "config " << ckpt.config.to_json().dump() << "\n";

  std::string curve = nsa::curve_csv_header() + "\n";
  nsa::train_epochs(ckpt, count, resolve_workers(a.workers),
                    [&](nsa::CurveRow row, const nsa::EpochStats& stats) {
                      if (a.no_timing) row.wall_ms = 0.0;
                      curve += nsa::curve_csv_row(row) + "\n";
                      if (!a.quiet) {
                        std::fprintf(stderr,
                                     "epoch %d best %.6f acc %.4f ploss %.5f "
                                     "vloss %.5f%s\n",
                                     row.epoch, row.mean_best_energy,
                                     row.mean_acceptance_rate, stats.policy_loss,
                                     stats.value_loss, stats.skipped ? " skipped" : "");
                      }
                    });
  nsa::save_checkpoint(a.out, ckpt);
  const std::string curve_path =
      a.curve.empty() ? fs::path(a.out).replace_extension(".curve.csv").string() : a.curve;
  nsa::write_file_atomic(curve_path, curve);
  return 0;
}

// ------------------------------------------------------------------ solve

struct PolicySource {
  std::string checkpoint;
  bool vanilla = false;
  std::optional<double> t0;
  std::optional<double> tk;
  double sigma = 1.0;
  int rosenbrock_steps = nsa::kRosenbrockDefaultSteps;
};

struct ResolvedPolicy {
  nsa::Policy policy;
  std::string trainer;
  double t0 = 1.0;
  double tk = 0.1;
  int rosenbrock_steps = nsa::kRosenbrockDefaultSteps;
  json config = json::object();
};

ResolvedPolicy resolve_policy(const PolicySource& s, nsa::ProblemKind problem) {
  if (s.vanilla == !s.checkpoint.empty()) {
    throw nsa::UsageError("pass exactly one of --checkpoint or --vanilla");
  }
  ResolvedPolicy r;
  if (s.vanilla) {
    const auto defaults = nsa::TrainConfig::defaults(problem, nsa::Trainer::kPpo);
    r.policy = nsa::uniform_policy(problem, s.sigma);
    r.trainer = "vanilla";
    r.t0 = defaults.t0;
    r.tk = defaults.tk;
    r.rosenbrock_steps = s.rosenbrock_steps;
    r.config = {{"problem", std::string(nsa::to_string(problem))}, {"sigma", s.sigma}};
  } else {
    const nsa::Checkpoint ckpt = nsa::load_checkpoint(s.checkpoint);
    if (ckpt.config.problem != problem) {
      throw nsa::ConfigError("checkpoint trained on " +
                             std::string(nsa::to_string(ckpt.config.problem)) +
                             " does not match a " +
                             std::string(nsa::to_string(problem)) + " input");
    }
    r.policy = ckpt.policy;
    r.trainer = std::string(nsa::to_string(ckpt.config.trainer));
    r.t0 = ckpt.config.t0;
    r.tk = ckpt.config.tk;
    r.rosenbrock_steps = ckpt.config.steps;
    r.config = ckpt.config.to_json();
  }
  if (s.t0) r.t0 = *s.t0;
  if (s.tk) r.tk = *s.tk;
  r.config["t0"] = r.t0;
  r.config["tk"] = r.tk;
  return r;
}

struct SolveArgs {
  PolicySource source;
  std::string instance;
  int mult = 1;
  std::string mode = "sampled";
  std::uint64_t seed = 0;
  std::string trace;
  std::string out;
};

int cmd_solve(const SolveArgs& a) {
  const json input = nsa::read_json(a.instance);
  // Accept a bare instance or the first instance of a dataset file.
  const nsa::Instance inst = nsa::instance_from_json(
      input.contains("instances") ? input.at("instances").at(0) : input);
  const nsa::ProblemKind kind = nsa::kind_of(inst);
  const ResolvedPolicy rp = resolve_policy(a.source, kind);
  const int n = static_cast<int>(nsa::instance_size(inst));
  const int steps = nsa::rollout_length(kind, n, a.mult, rp.rosenbrock_steps);
  const auto schedule = nsa::TemperatureSchedule::make(rp.t0, rp.tk, steps);
  const nsa::SamplingMode mode = nsa::mode_from_string(a.mode);
  nsa::AnnealOptions options;
  options.keep_records = !a.trace.empty();
  const nsa::Trajectory t = nsa::anneal(inst, rp.policy, schedule, mode, a.seed, options);

  json out = {{"problem", std::string(nsa::to_string(kind))},
              {"N", n},
              {"K", steps},
              {"mode", a.mode},
              {"seed", a.seed},
              {"trainer", rp.trainer},
              {"config", rp.config},
              {"best_energy", t.best_energy},
              {"value", nsa::reported_value(kind, t.best_energy)},
              {"acceptance_rate", t.acceptance_rate()},
              {"best_solution", nsa::solution_to_json(t.best_solution)}};
  write_text(a.out, nsa::dump_json(out));
  if (!a.trace.empty()) {
    std::string csv = "step,temperature,energy_before,energy_after,accepted,log_prob\n";
    char buf[192];
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const auto& r = t.records[k];
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%d,%.17g\n", k,
                    r.temperature, r.energy_before, r.energy_after,
                    r.accepted ? 1 : 0, r.log_prob);
      csv += buf;
    }
    nsa::write_file_atomic(a.trace, csv);
  }
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  PolicySource source;
  std::string dataset;
  std::string mults = "1,2,5,10";
  std::string mode = "sampled";
  int runs = 5;
  std::string out;
  std::string json_out;
  std::optional<double> reference;
  int workers = 0;
  bool no_timing = false;
};

int cmd_eval(const EvalArgs& a) {
  const nsa::Dataset d = nsa::load_dataset(a.dataset);
  const ResolvedPolicy rp = resolve_policy(a.source, d.problem);
  if (a.runs < 1) throw nsa::UsageError("--runs must be positive");
  nsa::EvalOptions options;
  options.mode = nsa::mode_from_string(a.mode);
  options.run_seeds.clear();
  for (int r = 1; r <= a.runs; ++r) options.run_seeds.push_back(static_cast<std::uint64_t>(r));
  options.t0 = rp.t0;
  options.tk = rp.tk;
  options.rosenbrock_steps = rp.rosenbrock_steps;
  options.workers = resolve_workers(a.workers);
  options.trainer = rp.trainer;

  std::string csv = nsa::results_csv_header() + "\n";
  json mirror = {{"dataset", {{"problem", std::string(nsa::to_string(d.problem))},
                              {"n", d.size},
                              {"count", d.count},
                              {"seed", d.seed}}},
                 {"config", rp.config},
                 {"results", json::array()}};
  for (int m : parse_int_list(a.mults)) {
    options.multiplier = m;
    const nsa::EvalReport r = nsa::evaluate(rp.policy, d, options);
    csv += nsa::results_csv_row(r, !a.no_timing) + "\n";
    json row = nsa::report_to_json(r, !a.no_timing);
    if (a.reference) row["gap_percent"] = nsa::gap(r.mean, *a.reference, nsa::sense_of(d.problem));
    mirror["results"].push_back(std::move(row));
  }
  write_text(a.out, csv);
  if (!a.json_out.empty()) nsa::write_file_atomic(a.json_out, nsa::dump_json(mirror));
  return 0;
}

// ----------------------------------------------------------------- oracle

struct OracleArgs {
  std::string dataset;
  std::string out;
  std::string cache;
};

int cmd_oracle(const OracleArgs& a) {
  const nsa::Dataset d = nsa::load_dataset(a.dataset);
  nsa::OracleCache cache = a.cache.empty() ? nsa::OracleCache() : nsa::OracleCache(a.cache);
  json rows = json::array();
  int solved = 0;
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    const auto& inst = d.instances[i];
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(nsa::instance_hash(inst)));
    const auto energy = cache.solve(inst);
    if (!energy) {
      std::cerr << "warning: instance " << i << " exceeds the oracle size cap, skipped\n";
      rows.push_back({{"index", i}, {"hash", hash}, {"skipped", true}});
      continue;
    }
    ++solved;
    rows.push_back({{"index", i},
                    {"hash", hash},
                    {"energy", *energy},
                    {"optimum", nsa::reported_value(d.problem, *energy)}});
  }
  cache.save();
  json out = {{"problem", std::string(nsa::to_string(d.problem))},
              {"n", d.size},
              {"seed", d.seed},
              {"solved", solved},
              {"instances", std::move(rows)}};
  write_text(a.out, nsa::dump_json(out));
  if (solved == 0 && !d.instances.empty()) {
    std::cerr << "error: every instance exceeds the oracle size cap\n";
    return 3;
  }
  return 0;
}

// ------------------------------------------------------------------ sweep

struct SweepArgs {
  std::string sigmas = "0.01,0.03,0.1,0.3,1.0";
  int steps = nsa::kRosenbrockDefaultSteps;
  double t0 = 1.0;
  double tk = 0.01;
  double a = 1.0;
  double b = 100.0;
  int count = 4096;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
};

int cmd_sweep(const SweepArgs& s) {
  const auto sigmas = parse_double_list(s.sigmas);
  const auto rows = nsa::fixed_sigma_sweep(
      nsa::RosenbrockInstance{s.a, s.b}, sigmas,
      nsa::TemperatureSchedule::make(s.t0, s.tk, s.steps), s.count, s.seed,
      resolve_workers(s.workers));
  write_text(s.out, nsa::sweep_csv(rows));
  return 0;
}

// ---------------------------------------------------------- export-logits

struct ExportArgs {
  std::string checkpoint;
  int net = 0;
  std::string base;
  std::string axis_a;
  std::string axis_b;
  std::string out;
};

int cmd_export(const ExportArgs& e) {
  const nsa::Checkpoint ckpt = nsa::load_checkpoint(e.checkpoint);
  const auto base = parse_double_list(e.base);
  if (e.net < 0 || static_cast<std::size_t>(e.net) >= ckpt.policy.nets.size()) {
    throw nsa::UsageError("--net must name one of the policy's " +
                          std::to_string(ckpt.policy.nets.size()) + " nets");
  }
  const int width = ckpt.policy.nets[static_cast<std::size_t>(e.net)].in();
  if (static_cast<int>(base.size()) != width) {
    throw nsa::UsageError("--base needs " + std::to_string(width) + " values");
  }
  write_text(e.out, nsa::export_policy_logits(ckpt.policy, e.net, base,
                                              parse_axis(e.axis_a), parse_axis(e.axis_b)));
  return 0;
}

void add_source(CLI::App* cmd, PolicySource& s) {
  cmd->add_option("--checkpoint", s.checkpoint, "Trained checkpoint JSON");
  cmd->add_flag("--vanilla", s.vanilla, "Use the uniform (vanilla SA) proposal");
  cmd->add_option("--t0", s.t0, "Override the initial temperature");
  cmd->add_option("--tk", s.tk, "Override the final temperature");
  cmd->add_option("--sigma", s.sigma, "Vanilla Gaussian sigma (Rosenbrock)");
  cmd->add_option("--rosenbrock-steps", s.rosenbrock_steps,
                  "Vanilla Rosenbrock rollout length");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural simulated annealing solver"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers,
                 "Parallel rollouts (default: NEURAL_SA_WORKERS or 1)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a seeded dataset");
  g->add_option("--problem", gen.problem, "knapsack|binpacking|tsp")->required();
  g->add_option("--n", gen.n, "Instance size")->required();
  g->add_option("--count", gen.count, "Number of instances")->required();
  g->add_option("--seed", gen.seed, "Generation seed");
  g->add_option("--out", gen.out, "Output path (- for stdout)")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a proposal policy");
  t->add_option("--problem", tr.problem, "knapsack|binpacking|tsp|rosenbrock");
  t->add_option("--trainer", tr.trainer, "es|ppo");
  t->add_option("--config", tr.config, "JSON overrides of the defaults");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_option("--epochs", tr.epochs, "Epochs to run (overrides config)");
  t->add_option("--seed", tr.seed, "Master seed");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--curve", tr.curve, "Training-curve CSV (default: next to --out)");
  t->add_option("--workers", tr.workers, "Parallel rollouts");
  t->add_flag("--no-timing", tr.no_timing, "Write 0 for wall_ms");
  t->add_flag("--quiet", tr.quiet, "No per-epoch lines");

  SolveArgs so;
  auto* s = app.add_subcommand("solve", "Anneal a single instance");
  add_source(s, so.source);
  s->add_option("--instance", so.instance, "Instance or dataset JSON")->required();
  s->add_option("--mult", so.mult, "Rollout-length multiplier");
  s->add_option("--mode", so.mode, "sampled|greedy");
  s->add_option("--seed", so.seed, "Rollout seed");
  s->add_option("--trace", so.trace, "Per-step trace CSV");
  s->add_option("--out", so.out, "Solution JSON (default stdout)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate over a dataset");
  add_source(e, ev.source);
  e->add_option("--dataset", ev.dataset, "Dataset JSON")->required();
  e->add_option("--mults", ev.mults, "Comma-separated multipliers");
  e->add_option("--mode", ev.mode, "sampled|greedy");
  e->add_option("--runs", ev.runs, "Run seeds 1..R");
  e->add_option("--out", ev.out, "Results CSV (default stdout)");
  e->add_option("--json", ev.json_out, "JSON mirror of the results");
  e->add_option("--reference", ev.reference, "Reference value for the gap column");
  e->add_option("--workers", ev.workers, "Parallel rollouts");
  e->add_flag("--no-timing", ev.no_timing, "Write 0 for wall_ms");

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "Exact optima for small instances");
  o->add_option("--dataset", orc.dataset, "Dataset JSON")->required();
  o->add_option("--out", orc.out, "Output JSON")->required();
  o->add_option("--cache", orc.cache, "Oracle cache JSON");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Fixed-sigma Rosenbrock baseline");
  w->add_option("--sigmas", sw.sigmas, "Comma-separated sigmas");
  w->add_option("--steps", sw.steps, "Rollout length");
  w->add_option("--t0", sw.t0, "Initial temperature");
  w->add_option("--tk", sw.tk, "Final temperature");
  w->add_option("--a", sw.a, "Rosenbrock a");
  w->add_option("--b", sw.b, "Rosenbrock b");
  w->add_option("--count", sw.count, "Random starts");
  w->add_option("--seed", sw.seed, "Master seed");
  w->add_option("--out", sw.out, "CSV path (default stdout)");
  w->add_option("--workers", sw.workers, "Parallel rollouts");

  ExportArgs ex;
  auto* x = app.add_subcommand("export-logits", "Policy outputs over a feature grid");
  x->add_option("--checkpoint", ex.checkpoint, "Checkpoint JSON")->required();
  x->add_option("--net", ex.net, "Stage index");
  x->add_option("--base", ex.base, "Comma-separated base feature row")->required();
  x->add_option("--axis-a", ex.axis_a, "feature:lo:hi:count")->required();
  x->add_option("--axis-b", ex.axis_b, "feature:lo:hi:count")->required();
  x->add_option("--out", ex.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (workers > 0) {
      if (tr.workers == 0) tr.workers = workers;
      if (ev.workers == 0) ev.workers = workers;
      if (sw.workers == 0) sw.workers = workers;
    }
    if (*g) return cmd_generate(gen);
    if (*t) {
      if (tr.resume.empty() && tr.problem.empty()) {
        throw nsa::UsageError("train needs --problem (or --resume)");
      }
      return cmd_train(tr);
    }
    if (*s) return cmd_solve(so);
    if (*e) return cmd_eval(ev);
    if (*o) return cmd_oracle(orc);
    if (*w) return cmd_sweep(sw);
    if (*x) return cmd_export(ex);
  } catch (const nsa::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const nsa::UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
