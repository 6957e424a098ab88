#include "nsa/schedule.hpp"

#include <cmath>
#include <string>

#include "nsa/error.hpp"

namespace nsa {

double compute_alpha(double t0, double tk, int steps) {
  if (!(t0 > 0.0) || !(tk > 0.0) || tk > t0) {
    throw InvalidSchedule("temperatures must satisfy 0 < tK <= t0 (t0=" +
                          std::to_string(t0) + ", tK=" + std::to_string(tk) +
                          ")");
  }
  if (steps < 1) throw InvalidSchedule("schedule needs at least one step");
  return std::pow(tk / t0, 1.0 / static_cast<double>(steps));
}

TemperatureSchedule TemperatureSchedule::make(double t0, double tk,
                                              int steps) {
  return {t0, tk, steps, compute_alpha(t0, tk, steps)};
}

double TemperatureSchedule::at(int k) const {
  return t0 * std::pow(alpha, static_cast<double>(k));
}

double temperature_at(const TemperatureSchedule& schedule, int k) {
  if (k < 0 || k > schedule.steps) {
    throw OutOfRange("step " + std::to_string(k) + " outside schedule of " +
                     std::to_string(schedule.steps) + " steps");
  }
  return schedule.at(k);
}

bool mh_accept(double delta_e, double temperature, double u) {
  if (delta_e <= 0.0) return true;
  if (temperature < 1e-300) return false;
  return u < std::exp(-delta_e / temperature);
}

}  // namespace nsa
