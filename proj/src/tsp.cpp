#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "nsa/error.hpp"
#include "nsa/problems.hpp"
#include "nsa/rng.hpp"

namespace nsa {

void TspInstance::validate() const {
  if (coords.size() < 4) throw InvalidInstance("TSP needs at least 4 cities");
  for (const auto& c : coords) {
    if (!std::isfinite(c[0]) || !std::isfinite(c[1])) {
      throw InvalidInstance("TSP coordinates must be finite");
    }
  }
}

double TspInstance::distance(int a, int b) const {
  const auto& p = coords[static_cast<std::size_t>(a)];
  const auto& q = coords[static_cast<std::size_t>(b)];
  return std::hypot(p[0] - q[0], p[1] - q[1]);
}

int TspTour::successor(int city) const {
  const std::size_t n = order.size();
  return order[(static_cast<std::size_t>(position[static_cast<std::size_t>(city)]) + 1) % n];
}

int TspTour::predecessor(int city) const {
  const std::size_t n = order.size();
  return order[(static_cast<std::size_t>(position[static_cast<std::size_t>(city)]) + n - 1) % n];
}

double tour_length(const TspInstance& inst, std::span<const int> order) {
  double length = 0.0;
  const std::size_t n = order.size();
  for (std::size_t k = 0; k < n; ++k) {
    length += inst.distance(order[k], order[(k + 1) % n]);
  }
  return length;
}

double tsp_energy(const TspInstance& inst, const TspTour& tour) {
  return tour_length(inst, tour.order);
}

TspTour make_tour(const TspInstance& inst, std::vector<int> order) {
  const std::size_t n = inst.size();
  if (order.size() != n) throw InvalidInstance("tour length differs from city count");
  TspTour tour;
  tour.position.assign(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    const int c = order[k];
    if (c < 0 || static_cast<std::size_t>(c) >= n ||
        tour.position[static_cast<std::size_t>(c)] != -1) {
      throw InvalidInstance("tour is not a permutation");
    }
    tour.position[static_cast<std::size_t>(c)] = static_cast<int>(k);
  }
  tour.order = std::move(order);
  tour.length = tour_length(inst, tour.order);
  return tour;
}

TspTour tsp_initial(const TspInstance& inst, Rng& rng) {
  std::vector<int> order(inst.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto r = static_cast<std::size_t>(rng.below(k));
    std::swap(order[k - 1], order[r]);
  }
  return make_tour(inst, std::move(order));
}

void tsp_city_mask(const TspTour& tour, int city, Mask& mask) {
  mask.assign(tour.order.size(), 1);
  mask[static_cast<std::size_t>(city)] = 0;
  mask[static_cast<std::size_t>(tour.successor(city))] = 0;
  mask[static_cast<std::size_t>(tour.predecessor(city))] = 0;
}

Mask tsp_city_mask(const TspTour& tour, int city) {
  Mask mask;
  tsp_city_mask(tour, city, mask);
  return mask;
}

namespace {

bool two_opt_allowed(const TspTour& tour, int i, int j) {
  return i != j && j != tour.successor(i) && j != tour.predecessor(i);
}

// Reverses tour positions first..first+len-1 (cyclic).
void reverse_span(TspTour& tour, std::size_t first, std::size_t len) {
  const std::size_t n = tour.order.size();
  std::size_t a = first;
  std::size_t b = (first + len - 1) % n;
  for (std::size_t k = 0; k < len / 2; ++k) {
    std::swap(tour.order[a], tour.order[b]);
    tour.position[static_cast<std::size_t>(tour.order[a])] = static_cast<int>(a);
    tour.position[static_cast<std::size_t>(tour.order[b])] = static_cast<int>(b);
    a = (a + 1) % n;
    b = (b + n - 1) % n;
  }
}

}  // namespace

double tsp_two_opt_delta(const TspInstance& inst, const TspTour& tour, int i,
                         int j) {
  const int s = tour.successor(i);
  const int t = tour.successor(j);
  return inst.distance(i, j) + inst.distance(s, t) - inst.distance(i, s) -
         inst.distance(j, t);
}

double apply_two_opt(const TspInstance& inst, TspTour& tour, int i, int j) {
  const auto n = static_cast<int>(tour.order.size());
  if (i < 0 || j < 0 || i >= n || j >= n || !two_opt_allowed(tour, i, j)) {
    throw InfeasibleAction("2-opt move (" + std::to_string(i) + ", " +
                           std::to_string(j) + ") is masked");
  }
  const double delta = tsp_two_opt_delta(inst, tour, i, j);
  const int s = tour.successor(i);
  const int t = tour.successor(j);
  const auto ps = static_cast<std::size_t>(tour.position[static_cast<std::size_t>(s)]);
  const auto pj = static_cast<std::size_t>(tour.position[static_cast<std::size_t>(j)]);
  const auto un = static_cast<std::size_t>(n);
  const std::size_t inner = (pj + un - ps) % un + 1;
  if (inner <= un - inner) {
    reverse_span(tour, ps, inner);
  } else {
    // Reversing the complement t..i yields the same cyclic tour.
    reverse_span(tour, static_cast<std::size_t>(tour.position[static_cast<std::size_t>(t)]),
                 un - inner);
  }
  tour.length += delta;
  return delta;
}

bool tsp_valid(const TspInstance& inst, const TspTour& tour, double tol) {
  const std::size_t n = inst.size();
  if (tour.order.size() != n || tour.position.size() != n) return false;
  for (std::size_t k = 0; k < n; ++k) {
    const int c = tour.order[k];
    if (c < 0 || static_cast<std::size_t>(c) >= n) return false;
    if (tour.position[static_cast<std::size_t>(c)] != static_cast<int>(k)) {
      return false;
    }
  }
  return std::abs(tour_length(inst, tour.order) - tour.length) <= tol;
}

}  // namespace nsa
