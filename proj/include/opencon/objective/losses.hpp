#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opencon/core/matrix.hpp"

namespace opencon::objective {

enum class Reduction { Mean, Sum };

// A batch loss over a set of views and its gradient w.r.t. those views.
struct BatchLoss {
  double value = 0.0;
  Matrix grad;
  std::size_t anchors = 0;  // anchors that contributed
};

// L_l: supervised contrastive loss over labeled views.
BatchLoss loss_supcon(const Matrix& embeddings, std::span<const int> labels, double tau,
                      Reduction reduction = Reduction::Mean);
// L_u: SimCLR loss over sibling-paired views.
BatchLoss loss_simclr(const Matrix& embeddings, double tau, Reduction reduction = Reduction::Mean);
// L_n: pseudo-label contrastive loss over gated views. Anchors with an empty
// positive set contribute nothing and are left out of the mean.
BatchLoss loss_novel(const Matrix& embeddings, std::span<const int> pseudo_labels, double tau,
                     Reduction reduction = Reduction::Mean);

// KL(mean_i softmax(M z_i / tau) || prior). Gradients flow to the embeddings only.
BatchLoss kl_regularizer(const Matrix& embeddings, const Matrix& prototypes, double tau,
                         std::span<const double> prior);
// KL(q || prior) with 0 log 0 = 0. Throws InvalidPrior for a prior that is not
// a distribution or has zeros where q does not.
double kl_divergence(std::span<const double> q, std::span<const double> prior);
std::vector<double> uniform_prior(std::size_t k);

struct LossWeights {
  double lambda_n = 0.1;
  double lambda_l = 0.2;
  double lambda_u = 1.0;
  double tau_n = 0.7;
  double tau_l = 0.1;
  double tau_u = 0.4;
  double kl_weight = 0.05;

  void validate() const;
};

struct LossToggles {
  bool use_l = true;
  bool use_u = true;
  bool use_n = true;
  bool use_kl = true;
  bool modified = false;  // replace L_l with L_known over D_l and D_u \ D_n
};

// Everything the composite loss needs from one training step.
struct OpenConInputs {
  const Matrix* labeled = nullptr;        // A_l embeddings
  std::span<const int> labels;            // ground truth of A_l
  const Matrix* unlabeled = nullptr;      // A_u embeddings
  std::span<const std::size_t> gated;     // rows of A_u forming A_n
  std::span<const int> pseudo_labels;     // argmax over Y_all for every row of A_u
  const Matrix* prototypes = nullptr;     // K x d
  std::span<const double> prior;          // empty => uniform over K
};

struct OpenConLoss {
  double total = 0.0;
  double loss_l = 0.0;  // L_l, or L_known in modified mode
  double loss_u = 0.0;
  double loss_n = 0.0;
  double kl = 0.0;
  Matrix grad_labeled;
  Matrix grad_unlabeled;
};

// total = lambda_n L_n + lambda_l L_l + lambda_u L_u + kl_weight KL.
OpenConLoss loss_opencon(const OpenConInputs& in, const LossWeights& weights,
                         const LossToggles& toggles = {});
// total = lambda_n L_n + lambda_l L_known + lambda_u L_u (+ KL); L_known uses
// tau_l over A_l plus the rejected (predicted-known) unlabeled views, labeled
// by ground truth or pseudo-label respectively.
OpenConLoss loss_modified(const OpenConInputs& in, const LossWeights& weights,
                          const LossToggles& toggles = {});

}  // namespace opencon::objective
