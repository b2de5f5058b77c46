#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "opencon/eval/theory.hpp"

namespace opencon::eval {

struct SuiteConfig {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  // Test hook: a negative tolerance makes every exact check fail.
  double tolerance = 1e-9;
};

struct TrialResult {
  std::uint64_t seed = 0;
  MeanPrototypeReport mean_prototype;
  AlignmentFormReport alignment;
  PopulationBoundReport population_bound;
};

struct SuiteReport {
  std::vector<TrialResult> trials;
  std::size_t mean_prototype_pass = 0;
  std::size_t alignment_pass = 0;
  std::size_t population_bound_pass = 0;
  std::size_t gamma_decreased = 0;  // reported, not asserted
  bool all_pass() const;
};

// Random instances per trial: 5 classes x 50 vMF features in d = 8 for the
// optimal-prototype check, 2-4 classes of 3-10 unit features for the
// alignment identity, and a <= 64 point population of 2-5 classes for the
// lower-bound chain (one random class is removed for the gamma comparison).
SuiteReport run_theory_suite(const SuiteConfig& config);

}  // namespace opencon::eval
