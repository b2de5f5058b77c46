#include "opencon/core/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "opencon/core/error.hpp"

namespace opencon {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void l2_normalize_inplace(std::span<double> v, double eps) {
  const double n = norm(v);
  if (!(n > eps)) fail(ErrorCode::DegenerateVector, "norm " + std::to_string(n) + " <= eps");
  for (double& x : v) x /= n;
}

Vec l2_normalize(std::span<const double> v, double eps) {
  Vec out(v.begin(), v.end());
  l2_normalize_inplace(out, eps);
  return out;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -INFINITY;
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

Vec softmax(std::span<const double> v, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
  Vec out(v.size());
  if (v.empty()) return out;
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - m) / tau);
    acc += out[i];
  }
  for (double& x : out) x /= acc;
  return out;
}

double percentile_threshold(std::span<const double> scores, double p) {
  if (scores.empty()) fail(ErrorCode::EmptyScores, "percentile of an empty score set");
  if (!(p >= 0.0 && p <= 100.0)) fail(ErrorCode::InvalidArgument, "percentile outside [0, 100]");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (100.0 - p) / 100.0));
  k = std::min(k, n - 1);
  return sorted[k];
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace opencon
