#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opencon/core/matrix.hpp"

namespace opencon::objective {

// Positive and negative index sets of one anchor within a multi-view batch.
struct ContrastSets {
  std::size_t anchor = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

// P = views (other than the anchor) sharing the anchor's label, N = all other views.
ContrastSets build_sets_supcon(std::span<const int> labels, std::size_t anchor);
// P = the sibling view (views 2k and 2k+1 pair up), N = all other views.
ContrastSets build_sets_simclr(std::size_t num_views, std::size_t anchor);
// Like SupCon over pseudo-labels; throws EmptyPositiveSet when no other view
// shares the anchor's pseudo-label.
ContrastSets build_sets_novel(std::span<const int> pseudo_labels, std::size_t anchor);

// sim(i, k) = z_i . z_k for all rows of `embeddings`.
Matrix similarity_matrix(const Matrix& embeddings);

struct PerSampleLoss {
  double loss = 0.0;
  Matrix grad;  // d(loss)/d(embeddings), same shape as the input
};

// -(1/|P|) sum_{p in P} log( exp(s_ap / tau) / sum_{n in N} exp(s_an / tau) )
PerSampleLoss per_sample_loss(const Matrix& embeddings, const ContrastSets& sets, double tau);

// Same loss on a precomputed similarity matrix. When `grad` is non-null,
// scale * d(loss)/d(embeddings) is added into it.
double per_sample_loss_accumulate(const Matrix& embeddings, const Matrix& sim, const ContrastSets& sets,
                                  double tau, Matrix* grad, double scale);

struct Alignment {
  double alignment = 0.0;   // L_a = -(1/|P|) sum_P s_ap / tau
  double uniformity = 0.0;  // L_b = (1/|P|) sum_P log sum_N exp(s_an / tau)
};

Alignment decompose_alignment(const Matrix& embeddings, const ContrastSets& sets, double tau);

}  // namespace opencon::objective
