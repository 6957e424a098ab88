#include "nsa/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "nsa/error.hpp"
#include "nsa/rng.hpp"
#include "nsa/serialize.hpp"

namespace nsa {

namespace {

struct SubsetSums {
  std::vector<double> weight;
  std::vector<double> value;
};

// Sums of every subset of items [lo, lo + n), indexed by bitmask.
SubsetSums subset_sums(const KnapsackInstance& inst, std::size_t lo,
                       std::size_t n) {
  const std::size_t count = std::size_t{1} << n;
  SubsetSums s{std::vector<double>(count, 0.0), std::vector<double>(count, 0.0)};
  for (std::size_t mask = 1; mask < count; ++mask) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(mask));
    const std::size_t rest = mask & (mask - 1);
    s.weight[mask] = s.weight[rest] + inst.weights[lo + bit];
    s.value[mask] = s.value[rest] + inst.values[lo + bit];
  }
  return s;
}

}  // namespace

KnapsackResult brute_force_knapsack(const KnapsackInstance& inst) {
  inst.validate();
  const std::size_t n = inst.size();
  if (n > kKnapsackOracleCap) {
    throw OutOfRange("knapsack oracle handles at most 24 items");
  }
  const std::size_t half = n / 2;
  const SubsetSums low = subset_sums(inst, 0, half);
  const SubsetSums high = subset_sums(inst, half, n - half);
  double best = 0.0;
  std::size_t best_low = 0;
  std::size_t best_high = 0;
  for (std::size_t h = 0; h < high.weight.size(); ++h) {
    if (high.weight[h] > inst.capacity) continue;
    for (std::size_t l = 0; l < low.weight.size(); ++l) {
      if (high.weight[h] + low.weight[l] > inst.capacity) continue;
      const double v = high.value[h] + low.value[l];
      if (v > best) {
        best = v;
        best_low = l;
        best_high = h;
      }
    }
  }
  KnapsackResult r;
  r.solution = knapsack_initial(inst);
  for (std::size_t i = 0; i < n; ++i) {
    const bool take = i < half ? (best_low >> i) & 1U : (best_high >> (i - half)) & 1U;
    if (take) {
      r.solution.bits[i] = 1;
      r.solution.total_weight += inst.weights[i];
      r.solution.total_value += inst.values[i];
    }
  }
  r.value = r.solution.total_value;
  return r;
}

TspOptimum brute_force_tsp(const TspInstance& inst) {
  inst.validate();
  const int n = static_cast<int>(inst.size());
  if (inst.size() > kTspOracleCap) {
    throw OutOfRange("TSP oracle handles at most 10 cities");
  }
  std::vector<int> rest(static_cast<std::size_t>(n - 1));
  std::iota(rest.begin(), rest.end(), 1);
  TspOptimum best;
  best.length = std::numeric_limits<double>::infinity();
  do {
    if (rest.front() > rest.back()) continue;  // skip the mirrored tour
    double len = inst.distance(0, rest.front());
    for (std::size_t k = 0; k + 1 < rest.size(); ++k) {
      len += inst.distance(rest[k], rest[k + 1]);
    }
    len += inst.distance(rest.back(), 0);
    if (len < best.length) {
      best.length = len;
      best.order.assign(1, 0);
      best.order.insert(best.order.end(), rest.begin(), rest.end());
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

int brute_force_binpacking(const BinPackingInstance& inst) {
  inst.validate();
  const std::size_t n = inst.size();
  if (n > kBinPackingOracleCap) {
    throw OutOfRange("bin packing oracle handles at most 10 items");
  }
  std::vector<double> w = inst.weights;
  std::sort(w.begin(), w.end(), std::greater<>());
  int best = static_cast<int>(n);
  std::vector<double> free;
  free.reserve(n);
  std::function<void(std::size_t)> place = [&](std::size_t i) {
    if (static_cast<int>(free.size()) >= best) return;
    if (i == n) {
      best = static_cast<int>(free.size());
      return;
    }
    for (std::size_t j = 0; j < free.size(); ++j) {
      if (free[j] >= w[i]) {
        free[j] -= w[i];
        place(i + 1);
        free[j] += w[i];
      }
    }
    if (static_cast<int>(free.size()) + 1 < best) {
      free.push_back(inst.capacity - w[i]);
      place(i + 1);
      free.pop_back();
    }
  };
  place(0);
  return best;
}

std::optional<double> optimal_energy(const Instance& inst) {
  if (const auto* k = std::get_if<KnapsackInstance>(&inst)) {
    if (k->size() > kKnapsackOracleCap) return std::nullopt;
    return -brute_force_knapsack(*k).value;
  }
  if (const auto* b = std::get_if<BinPackingInstance>(&inst)) {
    if (b->size() > kBinPackingOracleCap) return std::nullopt;
    return brute_force_binpacking(*b);
  }
  if (const auto* t = std::get_if<TspInstance>(&inst)) {
    if (t->size() > kTspOracleCap) return std::nullopt;
    return brute_force_tsp(*t).length;
  }
  return std::nullopt;
}

std::uint64_t instance_hash(const Instance& inst) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(kind_of(inst)) + 1);
  auto feed = [&h](double x) { h = mix64(h ^ std::bit_cast<std::uint64_t>(x)); };
  if (const auto* k = std::get_if<KnapsackInstance>(&inst)) {
    for (double w : k->weights) feed(w);
    for (double v : k->values) feed(v);
    feed(k->capacity);
  } else if (const auto* b = std::get_if<BinPackingInstance>(&inst)) {
    for (double w : b->weights) feed(w);
    feed(b->capacity);
  } else if (const auto* t = std::get_if<TspInstance>(&inst)) {
    for (const auto& p : t->coords) {
      feed(p[0]);
      feed(p[1]);
    }
  } else {
    const auto& r = std::get<RosenbrockInstance>(inst);
    feed(r.a);
    feed(r.b);
  }
  return h;
}

OracleCache::OracleCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  const nlohmann::json j = read_json(path_);
  for (const auto& [key, value] : j.items()) {
    entries_[std::stoull(key, nullptr, 16)] = value.get<double>();
  }
}

std::optional<double> OracleCache::find(const Instance& inst) const {
  const auto it = entries_.find(instance_hash(inst));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void OracleCache::put(const Instance& inst, double energy) {
  entries_[instance_hash(inst)] = energy;
}

std::optional<double> OracleCache::solve(const Instance& inst) {
  if (auto hit = find(inst)) return hit;
  auto value = optimal_energy(inst);
  if (value) put(inst, *value);
  return value;
}

void OracleCache::save() const {
  if (path_.empty()) return;
  nlohmann::json j = nlohmann::json::object();
  char key[17];
  for (const auto& [hash, value] : entries_) {
    std::snprintf(key, sizeof(key), "%016llx", static_cast<unsigned long long>(hash));
    j[key] = value;
  }
  write_file_atomic(path_, dump_json(j));
}

}  // namespace nsa
