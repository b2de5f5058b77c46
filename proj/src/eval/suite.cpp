#include "opencon/eval/suite.hpp"

#include "opencon/core/numeric.hpp"
#include "opencon/core/vmf.hpp"

namespace opencon::eval {

namespace {

Matrix vmf_rows(const Vec& mean, double kappa, std::size_t n, Rng& rng) {
  const auto rows = sample_vmf({mean, kappa}, n, rng);
  Matrix m(n, mean.size());
  for (std::size_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

}  // namespace

bool SuiteReport::all_pass() const {
  const std::size_t n = trials.size();
  return mean_prototype_pass == n && alignment_pass == n && population_bound_pass == n;
}

SuiteReport run_theory_suite(const SuiteConfig& config) {
  SuiteReport rep;
  for (std::size_t t = 0; t < config.trials; ++t) {
    TrialResult tr;
    tr.seed = config.seed + t;
    Rng rng(tr.seed, Stream::Theory);

    std::vector<Matrix> classes;
    for (int c = 0; c < 5; ++c) classes.push_back(vmf_rows(random_unit(8, rng), 5.0, 50, rng));
    tr.mean_prototype = verify_mean_prototype(classes, rng);
    if (config.tolerance < 0.0) tr.mean_prototype.pass = false;

    const std::size_t n_classes = 2 + rng.below(3);
    std::vector<int> assign;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const std::size_t size = 3 + rng.below(8);
      for (std::size_t i = 0; i < size; ++i) assign.push_back(static_cast<int>(c));
    }
    rng.shuffle(assign.begin(), assign.end());
    Matrix z(assign.size(), 8);
    for (std::size_t i = 0; i < assign.size(); ++i) {
      const Vec u = random_unit(8, rng);
      std::copy(u.begin(), u.end(), z.row(i).begin());
    }
    const double tau = 0.1 + 0.9 * rng.uniform();
    tr.alignment = verify_alignment_form(z, assign, tau, config.tolerance);

    const std::size_t pop_classes = 2 + rng.below(4);
    const std::size_t pop_size = 16 + rng.below(49);
    std::vector<Vec> means;
    for (std::size_t c = 0; c < pop_classes; ++c) means.push_back(random_unit(8, rng));
    std::vector<int> labels(pop_size);
    Matrix pop(pop_size, 8);
    for (std::size_t i = 0; i < pop_size; ++i) {
      // Every class gets at least one point.
      labels[i] = static_cast<int>(i < pop_classes ? i : rng.below(pop_classes));
      const auto x = sample_vmf({means[static_cast<std::size_t>(labels[i])], 10.0}, 1, rng);
      std::copy(x[0].begin(), x[0].end(), pop.row(i).begin());
    }
    const int removed = static_cast<int>(rng.below(pop_classes));
    tr.population_bound = verify_population_bound(pop, labels, tau, removed, config.tolerance);

    rep.mean_prototype_pass += tr.mean_prototype.pass;
    rep.alignment_pass += tr.alignment.pass;
    rep.population_bound_pass += tr.population_bound.pass;
    rep.gamma_decreased += tr.population_bound.removal_decreases_gamma;
    rep.trials.push_back(std::move(tr));
  }
  return rep;
}

}  // namespace opencon::eval
