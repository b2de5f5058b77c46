#pragma once

#include <span>

#include "opencon/core/matrix.hpp"

namespace opencon {

inline constexpr double kNormEpsilon = 1e-12;

// Left-to-right sum of products; the reduction order is part of the contract.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

// Throws DegenerateVector when the norm is <= eps.
Vec l2_normalize(std::span<const double> v, double eps = kNormEpsilon);
void l2_normalize_inplace(std::span<double> v, double eps = kNormEpsilon);

// log(sum(exp(v))) with max shift.
double log_sum_exp(std::span<const double> v);

// softmax(v / tau); throws InvalidTemperature for tau <= 0.
Vec softmax(std::span<const double> v, double tau = 1.0);

// Nearest-rank (lower) percentile: sorted_ascending[floor(n * (100 - p) / 100)],
// clamped to the last index. At least p% of the scores are >= the result.
double percentile_threshold(std::span<const double> scores, double p);

bool all_finite(std::span<const double> v);

}  // namespace opencon
