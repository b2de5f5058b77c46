#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"
#include "opencon/prototype/store.hpp"

namespace opencon::eval {

struct KMeansConfig {
  std::size_t max_iterations = 100;
  std::size_t restarts = 5;
};

struct KMeansResult {
  Matrix centroids;  // unit rows
  std::vector<int> assignment;
  double objective = 0.0;  // sum of cosines to the assigned centroid
  std::size_t iterations = 0;
};

// Cosine k-means on unit rows with k-means++ seeding; the restart with the
// largest objective wins.
KMeansResult spherical_kmeans(const Matrix& points, std::size_t k, Rng& rng, const KMeansConfig& config = {});

struct KEstimate {
  std::size_t best_k = 0;
  std::vector<std::size_t> candidates;
  std::vector<double> labeled_accuracy;
};

// Clusters all points for each candidate K and scores the clustering by its
// matched accuracy on the labeled subset (labels[i] < 0 means unlabeled).
// Ties go to the smallest K.
KEstimate estimate_class_number(const Matrix& points, std::span<const int> labels,
                                std::span<const std::size_t> candidates, Rng& rng,
                                const KMeansConfig& config = {});

// Prototypes that received at least one assignment since the last reset.
std::size_t converged_cluster_count(const prototype::PrototypeStore& store);

}  // namespace opencon::eval
