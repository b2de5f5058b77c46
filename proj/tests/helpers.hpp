#pragma once

#include <cmath>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/core/rng.hpp"
#include "opencon/core/vmf.hpp"

namespace testing {

inline opencon::Matrix random_unit_rows(std::size_t n, std::size_t d, opencon::Rng& rng) {
  opencon::Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = opencon::random_unit(d, rng);
    for (std::size_t j = 0; j < d; ++j) m(i, j) = u[j];
  }
  return m;
}

inline opencon::Matrix random_matrix(std::size_t n, std::size_t d, opencon::Rng& rng, double scale = 1.0) {
  opencon::Matrix m(n, d);
  for (double& x : m.storage()) x = scale * rng.normal();
  return m;
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace testing

#include "opencon/encoder/mlp.hpp"

namespace testing {

// Pointers to every parameter in a fixed order (w1, b1, w2, b2).
inline std::vector<double*> parameters(opencon::encoder::Mlp& m) {
  std::vector<double*> out;
  for (double& x : m.w1.storage()) out.push_back(&x);
  for (double& x : m.b1) out.push_back(&x);
  for (double& x : m.w2.storage()) out.push_back(&x);
  for (double& x : m.b2) out.push_back(&x);
  return out;
}

inline std::vector<double> flatten(const opencon::encoder::Mlp& m) {
  auto copy = m;
  std::vector<double> out;
  for (double* p : parameters(copy)) out.push_back(*p);
  return out;
}

// Central differences of f over every parameter of `m`.
template <class F>
std::vector<double> numeric_gradient(opencon::encoder::Mlp m, F&& f, double h = 1e-4) {
  std::vector<double> g;
  for (double* p : parameters(m)) {
    const double keep = *p;
    *p = keep + h;
    const double up = f(m);
    *p = keep - h;
    const double down = f(m);
    *p = keep;
    g.push_back((up - down) / (2.0 * h));
  }
  return g;
}

// |a - b| / max(|a|, |b|) in the Euclidean norm.
inline double vector_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / denom;
}

}  // namespace testing
