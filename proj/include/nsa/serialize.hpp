#pragma once

// JSON forms of instances, datasets, solutions and checkpoints.
//
// Instance: {"problem": "knapsack", "weights": [...], "values": [...],
//            "capacity": W}
//           {"problem": "binpacking", "weights": [...], "capacity": W}
//           {"problem": "tsp", "coords": [[x, y], ...]}
//           {"problem": "rosenbrock", "a": a, "b": b}
// Dataset:  {"problem", "n", "count", "seed", "instances": [...]}
// Checkpoint: {"problem", "trainer", "seed", "epochs_completed", "config",
//              "nets": [{"role", "in", "hidden", "out", "w1", "b1", "w2",
//              "b2"}], "critic": net or null, "optimizer": {...}}

#include <filesystem>
#include <string>

#include <json.hpp>

#include "nsa/dataset.hpp"
#include "nsa/problems.hpp"
#include "nsa/train.hpp"

namespace nsa {

nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const Solution& sol);

nlohmann::json mlp_to_json(const MlpParams& p, const std::string& role);
MlpParams mlp_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// Pretty-printed JSON with a trailing newline.
std::string dump_json(const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void save_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nsa
