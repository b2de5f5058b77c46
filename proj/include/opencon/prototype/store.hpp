#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "opencon/core/matrix.hpp"
#include "opencon/core/rng.hpp"

namespace opencon::prototype {

// One unit prototype per class. Rows [0, |Y_l|) are the known classes and are
// index-aligned with their ground-truth label; the remaining rows are novel.
struct PrototypeStore {
  Matrix means;
  std::vector<std::size_t> known_ids;
  std::vector<std::size_t> novel_ids;
  std::vector<std::size_t> assignment_counts;

  std::size_t num_classes() const { return means.rows(); }
  std::size_t dim() const { return means.cols(); }
  void reset_counts();
};

// Rows drawn uniformly on the sphere.
PrototypeStore init_prototypes(std::size_t n_classes, std::size_t n_known, std::size_t dim, Rng& rng);

enum class Restrict { All, Novel, Known };

// argmax_j mu_j^T z over the selected rows; ties go to the lowest id.
// Returns -1 when the selection is empty.
int pseudo_label(std::span<const double> z, const PrototypeStore& store, Restrict restrict = Restrict::All);

// max_{j in Y_l} mu_j^T z (-inf without known rows).
double known_score(std::span<const double> z, const PrototypeStore& store);

// mu_c <- normalize(gamma * mu_c + (1 - gamma) * z), bumping assignment_counts[c].
void moving_average_update(PrototypeStore& store, std::size_t c, std::span<const double> z, double gamma);

// Labeled views update their ground-truth row, then gated views update their
// nearest novel row (argmax over Y_n against the current store), each in
// ascending view order.
void update_prototypes(PrototypeStore& store, const Matrix& labeled, std::span<const int> labels,
                       const Matrix& unlabeled, std::span<const std::size_t> gated, double gamma);

// Known rows set to the normalized mean of their labeled embeddings.
void warm_start_known(PrototypeStore& store, const Matrix& embeddings, std::span<const int> labels);

}  // namespace opencon::prototype
