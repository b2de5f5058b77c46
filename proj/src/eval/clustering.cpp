#include "opencon/eval/clustering.hpp"

#include <algorithm>
#include <cmath>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/eval/metrics.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::eval {

namespace {

void copy_row(const Matrix& from, std::size_t r, Matrix& to, std::size_t c) {
  std::copy(from.row(r).begin(), from.row(r).end(), to.row(c).begin());
}

Matrix seed_centroids(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  copy_row(points, rng.below(n), centroids, 0);
  std::vector<double> best(n, -INFINITY);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::max(best[i], dot(points.row(i), centroids.row(c - 1)));
      total += std::max(0.0, 1.0 - best[i]);
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        u -= std::max(0.0, 1.0 - best[i]);
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    copy_row(points, pick, centroids, c);
  }
  return centroids;
}

KMeansResult run_once(const Matrix& points, std::size_t k, Rng& rng, const KMeansConfig& config) {
  const std::size_t n = points.rows(), d = points.cols();
  KMeansResult r;
  r.centroids = seed_centroids(points, k, rng);
  r.assignment.assign(n, -1);
  std::vector<double> score(n);
  Vec sims(k);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      simd::matvec(r.centroids.data(), k, d, points.row(i).data(), sims.data());
      const auto best = static_cast<int>(std::max_element(sims.begin(), sims.end()) - sims.begin());
      score[i] = sims[static_cast<std::size_t>(best)];
      if (best != r.assignment[i]) {
        r.assignment[i] = best;
        changed = true;
      }
    }
    r.iterations = it + 1;
    if (!changed && it > 0) break;

    Matrix sums(k, d);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.assignment[i]);
      simd::axpy(d, 1.0, points.row(i).data(), sums.row(c).data());
      ++sizes[c];
    }
    std::vector<char> moved(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0 && norm(sums.row(c)) > kNormEpsilon) {
        l2_normalize_inplace(sums.row(c));
        copy_row(sums, c, r.centroids, c);
        continue;
      }
      // Empty (or cancelling) cluster: restart it at the worst-fitting point.
      std::size_t worst = 0;
      double worst_score = INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        if (!moved[i] && score[i] < worst_score) {
          worst_score = score[i];
          worst = i;
        }
      }
      moved[worst] = 1;
      score[worst] = INFINITY;
      copy_row(points, worst, r.centroids, c);
    }
  }
  r.objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.objective += dot(points.row(i), r.centroids.row(static_cast<std::size_t>(r.assignment[i])));
  }
  return r;
}

}  // namespace

KMeansResult spherical_kmeans(const Matrix& points, std::size_t k, Rng& rng, const KMeansConfig& config) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  if (points.rows() < k) fail(ErrorCode::InvalidArgument, "fewer points than clusters");
  KMeansResult best;
  const std::size_t restarts = std::max<std::size_t>(config.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    KMeansResult run = run_once(points, k, rng, config);
    if (r == 0 || run.objective > best.objective) best = std::move(run);
  }
  return best;
}

KEstimate estimate_class_number(const Matrix& points, std::span<const int> labels,
                                std::span<const std::size_t> candidates, Rng& rng, const KMeansConfig& config) {
  if (candidates.empty()) fail(ErrorCode::InvalidArgument, "empty candidate range");
  if (labels.size() != points.rows()) fail(ErrorCode::ShapeMismatch, "one label slot per point");
  std::vector<std::size_t> labeled;
  std::vector<int> truth;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) {
      labeled.push_back(i);
      truth.push_back(labels[i]);
    }
  }
  if (labeled.empty()) fail(ErrorCode::EmptyLabeledSet, "class-number estimation needs labeled points");

  KEstimate est;
  est.candidates.assign(candidates.begin(), candidates.end());
  std::sort(est.candidates.begin(), est.candidates.end());
  est.candidates.erase(std::unique(est.candidates.begin(), est.candidates.end()), est.candidates.end());
  double best = -1.0;
  for (std::size_t k : est.candidates) {
    const KMeansResult km = spherical_kmeans(points, k, rng, config);
    std::vector<int> pred;
    pred.reserve(labeled.size());
    for (std::size_t i : labeled) pred.push_back(km.assignment[i]);
    const double acc = matched_accuracy(pred, truth);
    est.labeled_accuracy.push_back(acc);
    if (acc > best) {
      best = acc;
      est.best_k = k;
    }
  }
  return est;
}

std::size_t converged_cluster_count(const prototype::PrototypeStore& store) {
  return static_cast<std::size_t>(
      std::count_if(store.assignment_counts.begin(), store.assignment_counts.end(), [](std::size_t c) { return c > 0; }));
}

}  // namespace opencon::eval
