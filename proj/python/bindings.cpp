// Thin bridge over the C++ library. Structured values cross the boundary as
// JSON text; the neural_sa package turns them into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "nsa/anneal.hpp"
#include "nsa/baselines.hpp"
#include "nsa/dataset.hpp"
#include "nsa/error.hpp"
#include "nsa/evaluate.hpp"
#include "nsa/oracles.hpp"
#include "nsa/schedule.hpp"
#include "nsa/serialize.hpp"
#include "nsa/train.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw nsa::ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

struct Resolved {
  nsa::Policy policy;
  std::string trainer = "vanilla";
  double t0 = 1.0;
  double tk = 0.1;
  int rosenbrock_steps = nsa::kRosenbrockDefaultSteps;
};

// An empty checkpoint string selects the uniform proposal with the PPO
// default temperatures.
Resolved resolve(const std::string& checkpoint, nsa::ProblemKind problem,
                 double sigma) {
  Resolved r;
  if (checkpoint.empty()) {
    const auto d = nsa::TrainConfig::defaults(problem, nsa::Trainer::kPpo);
    r.policy = nsa::uniform_policy(problem, sigma);
    r.t0 = d.t0;
    r.tk = d.tk;
    return r;
  }
  const nsa::Checkpoint c = nsa::checkpoint_from_json(parse(checkpoint));
  if (c.config.problem != problem) {
    throw nsa::ConfigError("checkpoint problem does not match the instance");
  }
  r.policy = c.policy;
  r.trainer = std::string(nsa::to_string(c.config.trainer));
  r.t0 = c.config.t0;
  r.tk = c.config.tk;
  r.rosenbrock_steps = c.config.steps;
  return r;
}

std::string generate(const std::string& problem, int n, int count,
                     std::uint64_t seed) {
  const auto kind = nsa::problem_from_string(problem);
  return nsa::dataset_to_json(nsa::generate_dataset(kind, n, count, seed)).dump();
}

std::string solve(const std::string& instance, const std::string& checkpoint,
                  int multiplier, const std::string& mode, std::uint64_t seed,
                  std::optional<double> t0, std::optional<double> tk,
                  double sigma) {
  const nsa::Instance inst = nsa::instance_from_json(parse(instance));
  const auto kind = nsa::kind_of(inst);
  Resolved r = resolve(checkpoint, kind, sigma);
  if (t0) r.t0 = *t0;
  if (tk) r.tk = *tk;
  const int n = static_cast<int>(nsa::instance_size(inst));
  const int steps = nsa::rollout_length(kind, n, multiplier, r.rosenbrock_steps);
  const auto schedule = nsa::TemperatureSchedule::make(r.t0, r.tk, steps);
  nsa::AnnealOptions options;
  options.keep_records = false;
  const auto t = nsa::anneal(inst, r.policy, schedule, nsa::mode_from_string(mode),
                             seed, options);
  return json{{"problem", std::string(nsa::to_string(kind))},
              {"N", n},
              {"K", steps},
              {"trainer", r.trainer},
              {"best_energy", t.best_energy},
              {"final_energy", t.final_energy},
              {"value", nsa::reported_value(kind, t.best_energy)},
              {"acceptance_rate", t.acceptance_rate()},
              {"best_solution", nsa::solution_to_json(t.best_solution)}}
      .dump();
}

std::string evaluate(const std::string& dataset, const std::string& checkpoint,
                     int multiplier, const std::string& mode,
                     std::vector<std::uint64_t> run_seeds,
                     std::optional<double> t0, std::optional<double> tk,
                     double sigma, int workers) {
  const nsa::Dataset d = nsa::dataset_from_json(parse(dataset));
  Resolved r = resolve(checkpoint, d.problem, sigma);
  nsa::EvalOptions o;
  o.multiplier = multiplier;
  o.mode = nsa::mode_from_string(mode);
  o.run_seeds = std::move(run_seeds);
  o.t0 = t0.value_or(r.t0);
  o.tk = tk.value_or(r.tk);
  o.rosenbrock_steps = r.rosenbrock_steps;
  o.workers = workers;
  o.trainer = r.trainer;
  return nsa::report_to_json(nsa::evaluate(r.policy, d, o), false).dump();
}

std::string train(const std::string& problem, const std::string& trainer,
                  const std::string& overrides, std::uint64_t seed,
                  int workers) {
  auto config = nsa::TrainConfig::defaults(nsa::problem_from_string(problem),
                                           nsa::trainer_from_string(trainer));
  if (!overrides.empty()) config.apply(parse(overrides));
  config.validate();
  return nsa::checkpoint_to_json(nsa::train(config, seed, workers)).dump();
}

std::optional<double> optimal_energy(const std::string& instance) {
  return nsa::optimal_energy(nsa::instance_from_json(parse(instance)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural simulated annealing core";

  // Translators run newest first, so the base class is registered first.
  py::register_exception<nsa::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<nsa::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<nsa::UsageError>(m, "UsageError", PyExc_ValueError);

  m.def("generate", &generate, py::arg("problem"), py::arg("n"),
        py::arg("count"), py::arg("seed"));
  m.def("solve", &solve, py::arg("instance"), py::arg("checkpoint"),
        py::arg("multiplier"), py::arg("mode"), py::arg("seed"),
        py::arg("t0") = py::none(), py::arg("tk") = py::none(),
        py::arg("sigma") = 1.0, py::call_guard<py::gil_scoped_release>());
  m.def("evaluate", &evaluate, py::arg("dataset"), py::arg("checkpoint"),
        py::arg("multiplier"), py::arg("mode"), py::arg("run_seeds"),
        py::arg("t0") = py::none(), py::arg("tk") = py::none(),
        py::arg("sigma") = 1.0, py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("train", &train, py::arg("problem"), py::arg("trainer"),
        py::arg("overrides"), py::arg("seed"), py::arg("workers") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("optimal_energy", &optimal_energy, py::arg("instance"));
  m.def("temperature", [](double t0, double tk, int steps, int k) {
    return nsa::temperature_at(nsa::TemperatureSchedule::make(t0, tk, steps), k);
  }, py::arg("t0"), py::arg("tk"), py::arg("steps"), py::arg("k"));
  m.def("mh_accept", &nsa::mh_accept, py::arg("delta_e"), py::arg("temperature"),
        py::arg("u"));
  m.def("rollout_length", [](const std::string& problem, int n, int multiplier) {
    return nsa::rollout_length(nsa::problem_from_string(problem), n, multiplier);
  }, py::arg("problem"), py::arg("n"), py::arg("multiplier"));
}
