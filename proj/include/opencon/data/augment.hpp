#pragma once

#include <span>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"

namespace opencon::data {

// Vector-space stand-in for image augmentations: additive Gaussian noise
// followed by independent coordinate masking.
struct AugmentConfig {
  double noise_sigma = 0.1;
  double mask_prob = 0.1;
};

Vec augment(std::span<const double> input, Rng& rng, const AugmentConfig& config);

}  // namespace opencon::data
