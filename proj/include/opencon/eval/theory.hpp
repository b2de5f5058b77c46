#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"

namespace opencon::eval {

// Optimal-prototype check: the normalized class mean maximizes sum_x phi^T mu
// over unit mu, and the vMF log-likelihood ranks prototype configurations the
// same way as the summed alignment.
struct MeanPrototypeReport {
  bool pass = true;
  bool degenerate = false;         // some class had a zero mean
  double worst_margin = 0.0;       // min over classes/candidates of f(mu*) - f(candidate)
  std::size_t violations = 0;
  std::size_t rank_disagreements = 0;
};

struct MeanPrototypeConfig {
  std::size_t candidates = 1000;
  std::size_t configurations = 50;
  double kappa = 10.0;
};

MeanPrototypeReport verify_mean_prototype(const std::vector<Matrix>& features_by_class, Rng& rng, const MeanPrototypeConfig& config = {});

// Summed alignment term computed pairwise and through the class-mean form
//   -(1/tau) sum_c [ eta_c sum_{x in S_c} z_x^T mu_c - sum_{x in S_c} |z_x|^2 / (|S_c| - 1) ]
// with eta_c = |S_c| / (|S_c| - 1) * |mean_c|.
struct AlignmentFormReport {
  bool pass = true;
  bool degenerate = false;  // some class had a single member
  double pairwise = 0.0;
  double class_form = 0.0;
  double abs_error = 0.0;
  std::vector<int> classes;
  std::vector<double> eta;
};

AlignmentFormReport verify_alignment_form(const Matrix& embeddings, std::span<const int> assignments, double tau,
                           double tolerance = 1e-9);

// Exact-enumeration check of the lower-bound chain on a finite population.
struct PopulationBoundReport {
  bool pass = true;  // Jensen step and closing identity
  double gamma = 0.0;
  double l_sup = 0.0;
  double before_jensen = 0.0;  // expectation form with log E exp
  double after_jensen = 0.0;   // expectation form with E s
  double jensen_slack = 0.0;
  double bound = 0.0;          // (1 - gamma) / tau * l_sup
  double identity_error = 0.0;
  double gamma_after_removal = 0.0;
  int removed_class = -1;
  bool removal_decreases_gamma = false;
};

PopulationBoundReport verify_population_bound(const Matrix& population, std::span<const int> classes, double tau,
                                  int removed_class, double tolerance = 1e-9);

// Collision probability sum_c p_c^2 of the empirical class distribution.
double collision_probability(std::span<const int> classes);

}  // namespace opencon::eval
