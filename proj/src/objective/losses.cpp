#include "opencon/objective/losses.hpp"

#include <cmath>
#include <string>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/objective/contrast.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::objective {

namespace {

double reduction_scale(Reduction r, std::size_t anchors) {
  if (anchors == 0) return 0.0;
  return r == Reduction::Mean ? 1.0 / static_cast<double>(anchors) : 1.0;
}

// Shared driver: one anchor per view, sets from `make_sets`, skipping anchors
// whose positive set is empty.
template <class MakeSets>
BatchLoss contrastive_batch(const Matrix& embeddings, double tau, Reduction reduction,
                            MakeSets make_sets) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
  BatchLoss out;
  const std::size_t n = embeddings.rows();
  out.grad = Matrix(n, embeddings.cols());
  if (n == 0) return out;

  std::vector<ContrastSets> sets;
  sets.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    ContrastSets s = make_sets(a);
    if (!s.positives.empty()) sets.push_back(std::move(s));
  }
  out.anchors = sets.size();
  const double scale = reduction_scale(reduction, out.anchors);
  const Matrix sim = similarity_matrix(embeddings);
  double total = 0.0;
  for (const auto& s : sets) {
    total += per_sample_loss_accumulate(embeddings, sim, s, tau, &out.grad, scale);
  }
  out.value = total * scale;
  return out;
}

}  // namespace

BatchLoss loss_supcon(const Matrix& embeddings, std::span<const int> labels, double tau,
                      Reduction reduction) {
  if (labels.size() != embeddings.rows()) fail(ErrorCode::ShapeMismatch, "one label per view required");
  return contrastive_batch(embeddings, tau, reduction,
                           [&](std::size_t a) { return build_sets_supcon(labels, a); });
}

BatchLoss loss_simclr(const Matrix& embeddings, double tau, Reduction reduction) {
  const std::size_t n = embeddings.rows();
  return contrastive_batch(embeddings, tau, reduction,
                           [&](std::size_t a) { return build_sets_simclr(n, a); });
}

BatchLoss loss_novel(const Matrix& embeddings, std::span<const int> pseudo_labels, double tau,
                     Reduction reduction) {
  if (pseudo_labels.size() != embeddings.rows()) {
    fail(ErrorCode::ShapeMismatch, "one pseudo-label per view required");
  }
  // Anchors without positives are skipped rather than raising EmptyPositiveSet.
  return contrastive_batch(embeddings, tau, reduction,
                           [&](std::size_t a) { return build_sets_supcon(pseudo_labels, a); });
}

std::vector<double> uniform_prior(std::size_t k) {
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

namespace {

void validate_prior(std::span<const double> prior, std::size_t k) {
  if (prior.size() != k) fail(ErrorCode::InvalidPrior, "prior has the wrong number of classes");
  double sum = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0) || !std::isfinite(p)) fail(ErrorCode::InvalidPrior, "prior entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidPrior, "prior must sum to 1");
}

}  // namespace

double kl_divergence(std::span<const double> q, std::span<const double> prior) {
  validate_prior(prior, q.size());
  double kl = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    if (q[c] <= 0.0) continue;
    if (prior[c] <= 0.0) fail(ErrorCode::InvalidPrior, "prior is zero where q has mass");
    kl += q[c] * std::log(q[c] / prior[c]);
  }
  return kl;
}

BatchLoss kl_regularizer(const Matrix& embeddings, const Matrix& prototypes, double tau,
                         std::span<const double> prior) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
  const std::size_t n = embeddings.rows();
  const std::size_t k = prototypes.rows();
  const std::size_t d = embeddings.cols();
  if (prototypes.cols() != d) fail(ErrorCode::ShapeMismatch, "prototype and embedding widths differ");
  validate_prior(prior, k);

  BatchLoss out;
  out.grad = Matrix(n, d);
  out.anchors = n;
  if (n == 0) return out;

  Matrix q(n, k);
  Vec scores(k);
  Vec mean_q(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    simd::matvec(prototypes.data(), k, d, embeddings.row(i).data(), scores.data());
    const Vec p = softmax(scores, tau);
    for (std::size_t c = 0; c < k; ++c) {
      q(i, c) = p[c];
      mean_q[c] += p[c];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : mean_q) v *= inv_n;
  out.value = kl_divergence(mean_q, prior);

  // dKL/dq_ic = (log(qbar_c / prior_c) + 1) / n, then through the softmax.
  Vec g(k);
  for (std::size_t c = 0; c < k; ++c) g[c] = (std::log(mean_q[c] / prior[c]) + 1.0) * inv_n;
  Vec ds(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = q.row(i);
    const double avg = dot(qi, g);
    for (std::size_t c = 0; c < k; ++c) ds[c] = qi[c] * (g[c] - avg) / tau;
    simd::matvec_t(prototypes.data(), k, d, ds.data(), out.grad.row(i).data());
  }
  return out;
}

void LossWeights::validate() const {
  if (!(tau_n > 0.0) || !(tau_l > 0.0) || !(tau_u > 0.0)) {
    fail(ErrorCode::InvalidTemperature, "loss temperatures must be > 0");
  }
  if (!(lambda_n >= 0.0) || !(lambda_l >= 0.0) || !(lambda_u >= 0.0) || !(kl_weight >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "loss weights must be >= 0");
  }
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) fail(ErrorCode::InvalidArgument, "row index out of range");
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void add_scaled(Matrix& dst, const Matrix& src, double w) {
  simd::axpy(dst.size(), w, src.data(), dst.data());
}

struct Shared {
  const Matrix& z_l;
  const Matrix& z_u;
  const Matrix& protos;
  std::vector<double> prior;
};

Shared unpack(const OpenConInputs& in, const LossWeights& weights) {
  weights.validate();
  if (in.labeled == nullptr || in.unlabeled == nullptr || in.prototypes == nullptr) {
    fail(ErrorCode::InvalidArgument, "loss inputs are incomplete");
  }
  if (in.labels.size() != in.labeled->rows()) fail(ErrorCode::ShapeMismatch, "one label per labeled view");
  if (in.pseudo_labels.size() != in.unlabeled->rows()) {
    fail(ErrorCode::ShapeMismatch, "one pseudo-label per unlabeled view");
  }
  std::vector<double> prior = in.prior.empty() ? uniform_prior(in.prototypes->rows())
                                               : std::vector<double>(in.prior.begin(), in.prior.end());
  return Shared{*in.labeled, *in.unlabeled, *in.prototypes, std::move(prior)};
}

// L_u, L_n and KL land in `out`; shared by both composite losses.
void add_unlabeled_terms(const OpenConInputs& in, const Shared& s, const LossWeights& w,
                         const LossToggles& t, OpenConLoss& out) {
  if (t.use_u && s.z_u.rows() > 0) {
    const BatchLoss lu = loss_simclr(s.z_u, w.tau_u);
    out.loss_u = lu.value;
    add_scaled(out.grad_unlabeled, lu.grad, w.lambda_u);
  }
  if (t.use_n && !in.gated.empty()) {
    const Matrix z_n = gather_rows(s.z_u, in.gated);
    std::vector<int> labels_n(in.gated.size());
    for (std::size_t i = 0; i < in.gated.size(); ++i) labels_n[i] = in.pseudo_labels[in.gated[i]];
    const BatchLoss ln = loss_novel(z_n, labels_n, w.tau_n);
    out.loss_n = ln.value;
    for (std::size_t i = 0; i < in.gated.size(); ++i) {
      simd::axpy(s.z_u.cols(), w.lambda_n, ln.grad.row(i).data(), out.grad_unlabeled.row(in.gated[i]).data());
    }
  }
  if (t.use_kl && w.kl_weight > 0.0 && s.z_u.rows() > 0) {
    const BatchLoss kl = kl_regularizer(s.z_u, s.protos, w.tau_n, s.prior);
    out.kl = kl.value;
    add_scaled(out.grad_unlabeled, kl.grad, w.kl_weight);
  }
}

void finish_total(const LossWeights& w, OpenConLoss& out) {
  out.total = w.lambda_n * out.loss_n + w.lambda_l * out.loss_l + w.lambda_u * out.loss_u +
              w.kl_weight * out.kl;
  if (!std::isfinite(out.total)) fail(ErrorCode::NonFiniteLoss, "composite loss is not finite");
}

}  // namespace

OpenConLoss loss_opencon(const OpenConInputs& in, const LossWeights& weights, const LossToggles& toggles) {
  if (toggles.modified) return loss_modified(in, weights, toggles);
  const Shared s = unpack(in, weights);
  OpenConLoss out;
  out.grad_labeled = Matrix(s.z_l.rows(), s.z_l.cols());
  out.grad_unlabeled = Matrix(s.z_u.rows(), s.z_u.cols());
  if (toggles.use_l && s.z_l.rows() > 0) {
    const BatchLoss ll = loss_supcon(s.z_l, in.labels, weights.tau_l);
    out.loss_l = ll.value;
    add_scaled(out.grad_labeled, ll.grad, weights.lambda_l);
  }
  add_unlabeled_terms(in, s, weights, toggles, out);
  finish_total(weights, out);
  return out;
}

OpenConLoss loss_modified(const OpenConInputs& in, const LossWeights& weights, const LossToggles& toggles) {
  const Shared s = unpack(in, weights);
  OpenConLoss out;
  out.grad_labeled = Matrix(s.z_l.rows(), s.z_l.cols());
  out.grad_unlabeled = Matrix(s.z_u.rows(), s.z_u.cols());

  if (toggles.use_l) {
    std::vector<bool> is_gated(s.z_u.rows(), false);
    for (auto g : in.gated) is_gated.at(g) = true;
    std::vector<std::size_t> rejected;
    for (std::size_t i = 0; i < s.z_u.rows(); ++i) {
      if (!is_gated[i]) rejected.push_back(i);
    }
    const std::size_t n_l = s.z_l.rows();
    Matrix z_k(n_l + rejected.size(), s.z_l.cols());
    std::vector<int> labels_k(z_k.rows());
    for (std::size_t i = 0; i < n_l; ++i) {
      std::copy(s.z_l.row(i).begin(), s.z_l.row(i).end(), z_k.row(i).begin());
      labels_k[i] = in.labels[i];
    }
    for (std::size_t r = 0; r < rejected.size(); ++r) {
      const auto src = s.z_u.row(rejected[r]);
      std::copy(src.begin(), src.end(), z_k.row(n_l + r).begin());
      labels_k[n_l + r] = in.pseudo_labels[rejected[r]];
    }
    if (z_k.rows() > 0) {
      const BatchLoss lk = loss_supcon(z_k, labels_k, weights.tau_l);
      out.loss_l = lk.value;
      const std::size_t d = z_k.cols();
      for (std::size_t i = 0; i < n_l; ++i) {
        simd::axpy(d, weights.lambda_l, lk.grad.row(i).data(), out.grad_labeled.row(i).data());
      }
      for (std::size_t r = 0; r < rejected.size(); ++r) {
        simd::axpy(d, weights.lambda_l, lk.grad.row(n_l + r).data(),
                   out.grad_unlabeled.row(rejected[r]).data());
      }
    }
  }
  add_unlabeled_terms(in, s, weights, toggles, out);
  finish_total(weights, out);
  return out;
}

}  // namespace opencon::objective
