#pragma once

#include <cstddef>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"

namespace opencon {

struct VmfParams {
  Vec mean_direction;  // unit norm
  double kappa = 0.0;  // >= 0
};

// Uniform direction on the unit sphere in R^dim (Gaussian then normalize).
Vec random_unit(std::size_t dim, Rng& rng);

// n draws from vMF(mean, kappa) using Wood's rejection sampler for the
// cosine component and a uniform tangent direction.
std::vector<Vec> sample_vmf(const VmfParams& params, std::size_t n, Rng& rng);

}  // namespace opencon
