#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nsa {

class Rng;

enum class SamplingMode { kSampled, kGreedy };

// Softmax over unmasked entries with max-logit subtraction. Masked entries
// are exactly 0. Throws DegenerateMask when nothing is unmasked.
void masked_softmax(std::span<const double> logits,
                    std::span<const std::uint8_t> mask,
                    std::span<double> probs);
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask);

// Uniform distribution over unmasked entries (the vanilla proposal).
void uniform_masked(std::span<const std::uint8_t> mask,
                    std::span<double> probs);

struct Choice {
  int index = -1;
  double log_prob = 0.0;
};

// Sampled: inverse CDF at u; zero-probability entries are never chosen.
// Greedy: argmax, lowest index on ties; u is ignored.
Choice choose_action(std::span<const double> probs, SamplingMode mode,
                     double u);

// Draws u from rng only in Sampled mode.
Choice sample_action(std::span<const double> probs, SamplingMode mode,
                     Rng& rng);

}  // namespace nsa
