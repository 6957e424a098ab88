#include "nsa/categorical.hpp"

#include <cmath>
#include <limits>

#include "nsa/error.hpp"
#include "nsa/rng.hpp"

namespace nsa {

void masked_softmax(std::span<const double> logits,
                    std::span<const std::uint8_t> mask,
                    std::span<double> probs) {
  const std::size_t n = logits.size();
  if (mask.size() != n || probs.size() != n) {
    throw ShapeError("logits, mask and probabilities differ in length");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      any = true;
      if (logits[i] > max_logit) max_logit = logits[i];
    }
  }
  if (!any) throw DegenerateMask("every action is masked");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = mask[i] ? std::exp(logits[i] - max_logit) : 0.0;
    total += probs[i];
  }
  const double inv = 1.0 / total;
  for (std::size_t i = 0; i < n; ++i) probs[i] *= inv;
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask) {
  std::vector<double> probs(logits.size());
  masked_softmax(logits, mask, probs);
  return probs;
}

void uniform_masked(std::span<const std::uint8_t> mask,
                    std::span<double> probs) {
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  if (count == 0) throw DegenerateMask("every action is masked");
  const double p = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < mask.size(); ++i) probs[i] = mask[i] ? p : 0.0;
}

Choice choose_action(std::span<const double> probs, SamplingMode mode,
                     double u) {
  int chosen = -1;
  if (mode == SamplingMode::kGreedy) {
    double best = -1.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > best) {
        best = probs[i];
        chosen = static_cast<int>(i);
      }
    }
  } else {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      chosen = static_cast<int>(i);
      cumulative += probs[i];
      if (u < cumulative) break;
    }
  }
  if (chosen < 0 || probs[static_cast<std::size_t>(chosen)] <= 0.0) {
    throw DegenerateMask("distribution has no positive entry");
  }
  return {chosen, std::log(probs[static_cast<std::size_t>(chosen)])};
}

Choice sample_action(std::span<const double> probs, SamplingMode mode,
                     Rng& rng) {
  const double u = mode == SamplingMode::kSampled ? rng.uniform() : 0.0;
  return choose_action(probs, mode, u);
}

}  // namespace nsa
