#include "opencon/eval/theory.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/core/vmf.hpp"

namespace opencon::eval {

namespace {

Vec column_sum(const Matrix& rows) {
  Vec s(rows.cols(), 0.0);
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < rows.cols(); ++j) s[j] += rows(i, j);
  return s;
}

// log of the vMF normalizer C_d(kappa); only ever enters as a constant.
double log_vmf_normalizer(std::size_t d, double kappa) {
  const double nu = static_cast<double>(d) / 2.0 - 1.0;
  const double bessel = std::cyl_bessel_i(nu, kappa);
  if (!(bessel > 0.0) || !std::isfinite(bessel)) return 0.0;
  return nu * std::log(kappa) - (static_cast<double>(d) / 2.0) * std::log(2.0 * M_PI) - std::log(bessel);
}

std::map<int, std::vector<std::size_t>> group_by(std::span<const int> ids) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) groups[ids[i]].push_back(i);
  return groups;
}

}  // namespace

MeanPrototypeReport verify_mean_prototype(const std::vector<Matrix>& features_by_class, Rng& rng, const MeanPrototypeConfig& config) {
  MeanPrototypeReport rep;
  if (features_by_class.empty()) return rep;
  const std::size_t d = features_by_class.front().cols();
  rep.worst_margin = INFINITY;

  std::vector<Vec> sums;
  for (const Matrix& f : features_by_class) {
    if (f.rows() == 0) fail(ErrorCode::InvalidArgument, "every class needs at least one feature");
    if (f.cols() != d) fail(ErrorCode::DimensionMismatch, "feature widths differ between classes");
    sums.push_back(column_sum(f));
  }

  for (const Vec& s : sums) {
    const double len = norm(s);
    if (!(len > kNormEpsilon)) {
      rep.degenerate = true;
      continue;
    }
    const Vec best = l2_normalize(s);
    for (std::size_t t = 0; t < config.candidates; ++t) {
      const Vec u = random_unit(d, rng);
      const double margin = dot(s, best) - dot(s, u);
      rep.worst_margin = std::min(rep.worst_margin, margin);
      const bool parallel = 1.0 - dot(best, u) < 1e-12;
      if (margin < 0.0 || (margin == 0.0 && !parallel)) ++rep.violations;
    }
  }

  // Hard-assignment vMF log-likelihood vs summed alignment over random
  // prototype configurations: both must order the configurations alike.
  const double log_c = log_vmf_normalizer(d, config.kappa);
  std::vector<double> loglik, align;
  for (std::size_t r = 0; r < config.configurations; ++r) {
    double ll = 0.0, al = 0.0;
    for (std::size_t c = 0; c < sums.size(); ++c) {
      const Vec mu = random_unit(d, rng);
      const double a = dot(sums[c], mu);
      al += a;
      ll += static_cast<double>(features_by_class[c].rows()) * log_c + config.kappa * a;
    }
    loglik.push_back(ll);
    align.push_back(al);
  }
  for (std::size_t a = 0; a < align.size(); ++a) {
    for (std::size_t b = a + 1; b < align.size(); ++b) {
      const double da = align[a] - align[b];
      const double dl = loglik[a] - loglik[b];
      if (std::abs(da) < 1e-9) continue;
      if ((da > 0) != (dl > 0)) ++rep.rank_disagreements;
    }
  }

  if (rep.worst_margin == INFINITY) rep.worst_margin = 0.0;
  rep.pass = rep.violations == 0 && rep.rank_disagreements == 0;
  return rep;
}

AlignmentFormReport verify_alignment_form(const Matrix& embeddings, std::span<const int> assignments, double tau, double tolerance) {
  if (assignments.size() != embeddings.rows()) fail(ErrorCode::ShapeMismatch, "one assignment per embedding");
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
  AlignmentFormReport rep;
  double pairwise = 0.0, class_form = 0.0;
  for (const auto& [c, members] : group_by(assignments)) {
    const std::size_t n = members.size();
    if (n < 2) {
      rep.degenerate = true;
      continue;
    }
    const double denom = static_cast<double>(n - 1);
    double pair_sum = 0.0;
    for (std::size_t a : members)
      for (std::size_t b : members)
        if (a != b) pair_sum += dot(embeddings.row(a), embeddings.row(b));
    pairwise += pair_sum / denom;

    Vec mean(embeddings.cols(), 0.0);
    double self = 0.0;
    for (std::size_t a : members) {
      const auto z = embeddings.row(a);
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += z[j] / static_cast<double>(n);
      self += dot(z, z);
    }
    const double mean_norm = norm(mean);
    const double eta = static_cast<double>(n) / denom * mean_norm;
    double aligned = 0.0;
    if (mean_norm > kNormEpsilon) {
      const Vec mu = l2_normalize(mean);
      for (std::size_t a : members) aligned += dot(embeddings.row(a), mu);
    }
    class_form += eta * aligned - self / denom;
    rep.classes.push_back(c);
    rep.eta.push_back(eta);
  }
  rep.pairwise = -pairwise / tau;
  rep.class_form = -class_form / tau;
  rep.abs_error = std::abs(rep.pairwise - rep.class_form);
  rep.pass = rep.abs_error <= tolerance * std::max(1.0, std::abs(rep.pairwise));
  return rep;
}

double collision_probability(std::span<const int> classes) {
  if (classes.empty()) return 0.0;
  double g = 0.0;
  const double n = static_cast<double>(classes.size());
  for (const auto& [c, members] : group_by(classes)) {
    const double p = static_cast<double>(members.size()) / n;
    g += p * p;
  }
  return g;
}

PopulationBoundReport verify_population_bound(const Matrix& population, std::span<const int> classes, double tau,
                                  int removed_class, double tolerance) {
  if (classes.size() != population.rows()) fail(ErrorCode::ShapeMismatch, "one class per population point");
  if (population.rows() == 0) fail(ErrorCode::EmptyEvaluationSet, "empty population");
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
  PopulationBoundReport rep;
  const std::size_t n = population.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto groups = group_by(classes);

  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sim(i, j) = dot(population.row(i), population.row(j));

  // Negatives are drawn from the whole population: p(c-) * 1/|S(c-)| = 1/n.
  Vec log_mean_exp(n), mean_sim(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec scaled(n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      scaled[j] = sim(i, j) / tau;
      s += scaled[j];
    }
    log_mean_exp[i] = log_sum_exp(scaled) - std::log(static_cast<double>(n));
    mean_sim[i] = s * inv_n;
  }

  double before = 0.0, after = 0.0;
  for (const auto& [c, members] : groups) {
    const double m = static_cast<double>(members.size());
    const double weight = (m * inv_n) / (m * m);
    for (std::size_t a : members) {
      for (std::size_t b : members) {
        const double pos = sim(a, b) / tau;
        before -= weight * (pos - log_mean_exp[a]);
        after -= weight * (pos - mean_sim[a]);
      }
    }
  }
  rep.before_jensen = before;
  rep.after_jensen = after;
  rep.jensen_slack = before - after;

  // Mean classifier and its supervised loss conditioned on c+ != c-.
  std::vector<Vec> means;
  std::vector<double> probs;
  std::vector<const std::vector<std::size_t>*> sets;
  for (const auto& [c, members] : groups) {
    Vec mu(population.cols(), 0.0);
    for (std::size_t a : members)
      for (std::size_t j = 0; j < mu.size(); ++j) mu[j] += population(a, j) / static_cast<double>(members.size());
    means.push_back(std::move(mu));
    probs.push_back(static_cast<double>(members.size()) * inv_n);
    sets.push_back(&members);
  }
  rep.gamma = 0.0;
  for (double p : probs) rep.gamma += p * p;
  double l_sup = 0.0;
  if (rep.gamma < 1.0) {
    for (std::size_t cp = 0; cp < means.size(); ++cp) {
      for (std::size_t cn = 0; cn < means.size(); ++cn) {
        if (cp == cn) continue;
        double e = 0.0;
        for (std::size_t a : *sets[cp]) {
          e += (dot(population.row(a), means[cp]) - dot(population.row(a), means[cn])) /
               static_cast<double>(sets[cp]->size());
        }
        l_sup -= probs[cp] * probs[cn] / (1.0 - rep.gamma) * e;
      }
    }
  }
  rep.l_sup = l_sup;
  rep.bound = (1.0 - rep.gamma) / tau * l_sup;
  rep.identity_error = std::abs(rep.after_jensen - rep.bound);

  const auto it = groups.find(removed_class);
  if (it != groups.end() && it->second.size() < n) {
    const double rest = static_cast<double>(n - it->second.size());
    double g = 0.0;
    for (const auto& [c, members] : groups) {
      if (c == removed_class) continue;
      const double p = static_cast<double>(members.size()) / rest;
      g += p * p;
    }
    rep.removed_class = removed_class;
    rep.gamma_after_removal = g;
    rep.removal_decreases_gamma = g < rep.gamma;
  }

  rep.pass = rep.jensen_slack >= -tolerance && rep.identity_error <= tolerance * std::max(1.0, std::abs(rep.bound));
  return rep;
}

}  // namespace opencon::eval
