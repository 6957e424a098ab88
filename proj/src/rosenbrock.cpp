#include <cmath>

#include "nsa/error.hpp"
#include "nsa/problems.hpp"
#include "nsa/rng.hpp"

namespace nsa {

void RosenbrockInstance::validate() const {
  if (!(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidInstance("Rosenbrock needs finite a and b > 0");
  }
}

double rosenbrock_energy(const RosenbrockInstance& inst,
                         const RosenbrockPoint& p) {
  const double u = inst.a - p.x0;
  const double v = p.x1 - p.x0 * p.x0;
  return u * u + inst.b * v * v;
}

RosenbrockPoint rosenbrock_initial(Rng& rng) {
  const double x0 = rng.uniform(-2.0, 2.0);
  const double x1 = rng.uniform(-2.0, 2.0);
  return {x0, x1};
}

double apply_rosenbrock_step(const RosenbrockInstance& inst,
                             RosenbrockPoint& p, double dx0, double dx1) {
  const double before = rosenbrock_energy(inst, p);
  p.x0 += dx0;
  p.x1 += dx1;
  return rosenbrock_energy(inst, p) - before;
}

}  // namespace nsa
