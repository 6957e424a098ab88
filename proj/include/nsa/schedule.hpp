#pragma once

namespace nsa {

// Exponential multiplicative cooling T_k = t0 * alpha^k with alpha chosen so
// that T_K = tK after `steps` steps.
struct TemperatureSchedule {
  double t0 = 1.0;
  double tk = 0.1;
  int steps = 1;
  double alpha = 1.0;

  static TemperatureSchedule make(double t0, double tk, int steps);
  double at(int k) const;
};

// (tK / t0)^(1/K). Throws InvalidSchedule unless 0 < tK <= t0 and K >= 1.
double compute_alpha(double t0, double tk, int steps);

// Throws OutOfRange for k outside [0, K].
double temperature_at(const TemperatureSchedule& schedule, int k);

// Metropolis criterion: u < exp(-delta_e / T). Downhill and flat moves are
// always accepted; below T = 1e-300 only those are.
bool mh_accept(double delta_e, double temperature, double u);

}  // namespace nsa
