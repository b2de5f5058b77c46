#include "opencon/data/augment.hpp"

namespace opencon::data {

Vec augment(std::span<const double> input, Rng& rng, const AugmentConfig& config) {
  Vec out(input.begin(), input.end());
  if (config.noise_sigma > 0.0) {
    for (double& x : out) x += config.noise_sigma * rng.normal();
  }
  if (config.mask_prob > 0.0) {
    for (double& x : out) {
      if (rng.bernoulli(config.mask_prob)) x = 0.0;
    }
  }
  return out;
}

}  // namespace opencon::data
