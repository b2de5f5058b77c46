#include "opencon/core/vmf.hpp"

#include <cmath>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"

namespace opencon {

Vec random_unit(std::size_t dim, Rng& rng) {
  Vec v(dim);
  double n = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    n = norm(v);
  } while (!(n > kNormEpsilon));
  for (double& x : v) x /= n;
  return v;
}

namespace {

// Draws w = mu^T x from the marginal of vMF on S^{dim-1} (Wood 1994).
double sample_cosine(std::size_t dim, double kappa, Rng& rng) {
  const double m = static_cast<double>(dim);
  const double b = (m - 1.0) / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + (m - 1.0) * (m - 1.0)));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + (m - 1.0) * std::log(1.0 - x0 * x0);
  for (;;) {
    // z ~ Beta((m-1)/2, (m-1)/2) as a ratio of Gamma((m-1)/2) draws, each a
    // half chi-square with m-1 degrees of freedom.
    double g1 = 0.0;
    double g2 = 0.0;
    for (std::size_t i = 0; i + 1 < dim; ++i) {
      const double n1 = rng.normal();
      g1 += 0.5 * n1 * n1;
    }
    for (std::size_t i = 0; i + 1 < dim; ++i) {
      const double n2 = rng.normal();
      g2 += 0.5 * n2 * n2;
    }
    const double z = g1 / (g1 + g2);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform();
    if (kappa * w + (m - 1.0) * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

}  // namespace

std::vector<Vec> sample_vmf(const VmfParams& params, std::size_t n, Rng& rng) {
  const auto& mu = params.mean_direction;
  const std::size_t dim = mu.size();
  if (dim < 2) fail(ErrorCode::InvalidDimension, "vMF needs dimension >= 2");
  if (!(params.kappa >= 0.0)) fail(ErrorCode::InvalidArgument, "kappa must be >= 0");

  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double w = sample_cosine(dim, params.kappa, rng);
    // Tangent direction: Gaussian projected onto mu's orthogonal complement.
    Vec t(dim);
    double tn = 0.0;
    do {
      for (double& x : t) x = rng.normal();
      const double proj = dot(t, mu);
      for (std::size_t i = 0; i < dim; ++i) t[i] -= proj * mu[i];
      tn = norm(t);
    } while (!(tn > 1e-9));
    const double s_perp = std::sqrt(std::max(0.0, 1.0 - w * w));
    Vec x(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = w * mu[i] + s_perp * t[i] / tn;
    l2_normalize_inplace(x);
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace opencon
