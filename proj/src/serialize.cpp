#include "nsa/serialize.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "nsa/error.hpp"

namespace nsa {

using nlohmann::json;

namespace {

template <class T>
std::vector<T> vec(const json& j, const char* key) {
  return j.at(key).get<std::vector<T>>();
}

json matrix_rows(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return flat;
}

json adam_to_json(const AdamState& s) {
  return {{"m", s.m}, {"v", s.v}, {"step", s.step}};
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.m = vec<double>(j, "m");
  s.v = vec<double>(j, "v");
  s.step = j.at("step").get<std::int64_t>();
  return s;
}

}  // namespace

json instance_to_json(const Instance& inst) {
  json j;
  j["problem"] = std::string(to_string(kind_of(inst)));
  if (const auto* k = std::get_if<KnapsackInstance>(&inst)) {
    j["weights"] = k->weights;
    j["values"] = k->values;
    j["capacity"] = k->capacity;
  } else if (const auto* b = std::get_if<BinPackingInstance>(&inst)) {
    j["weights"] = b->weights;
    j["capacity"] = b->capacity;
  } else if (const auto* t = std::get_if<TspInstance>(&inst)) {
    json coords = json::array();
    for (const auto& p : t->coords) coords.push_back({p[0], p[1]});
    j["coords"] = std::move(coords);
  } else {
    const auto& r = std::get<RosenbrockInstance>(inst);
    j["a"] = r.a;
    j["b"] = r.b;
  }
  return j;
}

Instance instance_from_json(const json& j) {
  try {
    const ProblemKind kind = problem_from_string(j.at("problem").get<std::string>());
    Instance out;
    switch (kind) {
      case ProblemKind::kKnapsack:
        out = KnapsackInstance{vec<double>(j, "weights"), vec<double>(j, "values"),
                               j.at("capacity").get<double>()};
        break;
      case ProblemKind::kBinPacking:
        out = BinPackingInstance{vec<double>(j, "weights"),
                                 j.at("capacity").get<double>()};
        break;
      case ProblemKind::kTsp: {
        TspInstance t;
        for (const auto& p : j.at("coords")) {
          t.coords.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        out = std::move(t);
        break;
      }
      case ProblemKind::kRosenbrock:
        out = RosenbrockInstance{j.value("a", 1.0), j.value("b", 100.0)};
        break;
    }
    validate(out);
    return out;
  } catch (const json::exception& e) {
    throw InvalidInstance(std::string("malformed instance: ") + e.what());
  }
}

json dataset_to_json(const Dataset& d) {
  json instances = json::array();
  for (const auto& inst : d.instances) instances.push_back(instance_to_json(inst));
  return {{"problem", std::string(to_string(d.problem))},
          {"n", d.size},
          {"count", d.count},
          {"seed", d.seed},
          {"instances", std::move(instances)}};
}

Dataset dataset_from_json(const json& j) {
  try {
    Dataset d;
    d.problem = problem_from_string(j.at("problem").get<std::string>());
    d.size = j.at("n").get<int>();
    d.seed = j.value("seed", std::uint64_t{0});
    for (const auto& inst : j.at("instances")) {
      d.instances.push_back(instance_from_json(inst));
      if (kind_of(d.instances.back()) != d.problem) {
        throw InvalidInstance("dataset mixes problem families");
      }
    }
    d.count = static_cast<int>(d.instances.size());
    return d;
  } catch (const json::exception& e) {
    throw InvalidInstance(std::string("malformed dataset: ") + e.what());
  }
}

json solution_to_json(const Solution& sol) {
  if (const auto* k = std::get_if<KnapsackSolution>(&sol)) {
    return {{"bits", k->bits}, {"total_weight", k->total_weight},
            {"total_value", k->total_value}};
  }
  if (const auto* b = std::get_if<BinPackingSolution>(&sol)) {
    return {{"bin_of_item", b->bin_of_item}, {"occupied_bins", b->occupied_bins}};
  }
  if (const auto* t = std::get_if<TspTour>(&sol)) {
    return {{"order", t->order}, {"length", t->length}};
  }
  const auto& p = std::get<RosenbrockPoint>(sol);
  return {{"x", {p.x0, p.x1}}};
}

json mlp_to_json(const MlpParams& p, const std::string& role) {
  return {{"role", role},
          {"in", p.in()},
          {"hidden", p.hidden()},
          {"out", p.out()},
          {"w1", matrix_rows(p.w1)},
          {"b1", std::vector<double>(p.b1.data(), p.b1.data() + p.b1.size())},
          {"w2", matrix_rows(p.w2)},
          {"b2", std::vector<double>(p.b2.data(), p.b2.data() + p.b2.size())}};
}

MlpParams mlp_from_json(const json& j) {
  const int in = j.at("in").get<int>();
  const int hidden = j.at("hidden").get<int>();
  const int out = j.at("out").get<int>();
  MlpParams p = MlpParams::zeros(in, out, hidden);
  std::vector<double> flat;
  for (const char* key : {"w1", "b1", "w2", "b2"}) {
    const auto part = vec<double>(j, key);
    flat.insert(flat.end(), part.begin(), part.end());
  }
  if (flat.size() != p.parameter_count()) {
    throw ShapeError("network weights do not match declared shape");
  }
  p.assign(flat);
  return p;
}

json checkpoint_to_json(const Checkpoint& c) {
  json nets = json::array();
  const auto layout = net_layout(c.policy.problem);
  for (std::size_t s = 0; s < c.policy.nets.size(); ++s) {
    nets.push_back(mlp_to_json(c.policy.nets[s], layout[s].role));
  }
  json optimizer = json::object();
  if (c.config.trainer == Trainer::kEs) {
    optimizer["sgd_velocity"] = c.es.sgd.velocity;
  } else {
    optimizer["adam_policy"] = adam_to_json(c.ppo.policy);
    optimizer["adam_critic"] = adam_to_json(c.ppo.critic);
  }
  return {{"problem", std::string(to_string(c.policy.problem))},
          {"trainer", std::string(to_string(c.config.trainer))},
          {"seed", c.seed},
          {"epochs_completed", c.epochs_completed},
          {"config", c.config.to_json()},
          {"nets", std::move(nets)},
          {"critic", c.critic ? mlp_to_json(*c.critic, "critic") : json(nullptr)},
          {"optimizer", std::move(optimizer)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint c;
    c.config = TrainConfig::from_json(j.at("config"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs_completed = j.value("epochs_completed", 0);
    c.policy.problem = problem_from_string(j.at("problem").get<std::string>());
    if (c.policy.problem != c.config.problem) {
      throw ConfigError("checkpoint problem differs from its config");
    }
    for (const auto& net : j.at("nets")) c.policy.nets.push_back(mlp_from_json(net));
    c.policy.check_layout();
    if (!j.at("critic").is_null()) c.critic = mlp_from_json(j.at("critic"));
    const json& opt = j.value("optimizer", json::object());
    if (opt.contains("sgd_velocity")) c.es.sgd.velocity = vec<double>(opt, "sgd_velocity");
    if (opt.contains("adam_policy")) c.ppo.policy = adam_from_json(opt.at("adam_policy"));
    if (opt.contains("adam_critic")) c.ppo.critic = adam_from_json(opt.at("adam_critic"));
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("checkpoint layout: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const json& j) { return j.dump(1) + "\n"; }

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
  write_file_atomic(path, dump_json(dataset_to_json(d)));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json(path));
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, dump_json(checkpoint_to_json(c)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json(path));
}

}  // namespace nsa
