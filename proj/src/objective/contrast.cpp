#include "opencon/objective/contrast.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opencon/core/error.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::objective {

namespace {

ContrastSets sets_by_label(std::span<const int> labels, std::size_t anchor) {
  if (anchor >= labels.size()) fail(ErrorCode::InvalidArgument, "anchor outside the batch");
  ContrastSets s;
  s.anchor = anchor;
  s.negatives.reserve(labels.size() - 1);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k == anchor) continue;
    s.negatives.push_back(k);
    if (labels[k] == labels[anchor]) s.positives.push_back(k);
  }
  return s;
}

void check_temperature(double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidTemperature, "tau must be > 0");
}

}  // namespace

ContrastSets build_sets_supcon(std::span<const int> labels, std::size_t anchor) {
  return sets_by_label(labels, anchor);
}

ContrastSets build_sets_simclr(std::size_t num_views, std::size_t anchor) {
  if (anchor >= num_views || num_views % 2 != 0) {
    fail(ErrorCode::InvalidArgument, "anchor outside an even-sized multi-view batch");
  }
  ContrastSets s;
  s.anchor = anchor;
  s.positives.push_back(anchor ^ std::size_t{1});
  s.negatives.reserve(num_views - 1);
  for (std::size_t k = 0; k < num_views; ++k) {
    if (k != anchor) s.negatives.push_back(k);
  }
  return s;
}

ContrastSets build_sets_novel(std::span<const int> pseudo_labels, std::size_t anchor) {
  ContrastSets s = sets_by_label(pseudo_labels, anchor);
  if (s.positives.empty()) {
    fail(ErrorCode::EmptyPositiveSet, "no other view shares pseudo-label " +
                                          std::to_string(pseudo_labels[anchor]));
  }
  return s;
}

Matrix similarity_matrix(const Matrix& embeddings) {
  const std::size_t n = embeddings.rows();
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    simd::matvec(embeddings.data(), n, embeddings.cols(), embeddings.row(i).data(), sim.row(i).data());
  }
  return sim;
}

namespace {

void validate_sets(const ContrastSets& sets, std::size_t n) {
  if (sets.positives.empty()) fail(ErrorCode::EmptyPositiveSet, "positive set is empty");
  if (sets.negatives.empty()) fail(ErrorCode::InvalidArgument, "negative set is empty");
  if (sets.anchor >= n) fail(ErrorCode::InvalidArgument, "anchor outside the batch");
  for (auto k : sets.positives) {
    if (k >= n || k == sets.anchor) fail(ErrorCode::InvalidArgument, "bad positive index");
  }
  for (auto k : sets.negatives) {
    if (k >= n || k == sets.anchor) fail(ErrorCode::InvalidArgument, "bad negative index");
  }
}

double negatives_log_sum_exp(std::span<const double> sim_row, const ContrastSets& sets, double tau) {
  double m = -INFINITY;
  for (auto k : sets.negatives) m = std::max(m, sim_row[k] / tau);
  double acc = 0.0;
  for (auto k : sets.negatives) acc += std::exp(sim_row[k] / tau - m);
  return m + std::log(acc);
}

}  // namespace

double per_sample_loss_accumulate(const Matrix& embeddings, const Matrix& sim, const ContrastSets& sets,
                                  double tau, Matrix* grad, double scale) {
  check_temperature(tau);
  validate_sets(sets, embeddings.rows());
  const auto row = sim.row(sets.anchor);
  const double lse = negatives_log_sum_exp(row, sets, tau);
  const double inv_p = 1.0 / static_cast<double>(sets.positives.size());

  double acc = 0.0;
  for (auto k : sets.positives) acc += row[k] / tau - lse;
  const double loss = -acc * inv_p;

  if (grad != nullptr) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    Vec coef(n, 0.0);
    for (auto k : sets.negatives) coef[k] += std::exp(row[k] / tau - lse) / tau;
    for (auto k : sets.positives) coef[k] -= inv_p / tau;
    const double* za = embeddings.row(sets.anchor).data();
    double* ga = grad->row(sets.anchor).data();
    for (std::size_t k = 0; k < n; ++k) {
      if (coef[k] == 0.0) continue;
      const double c = scale * coef[k];
      simd::axpy(d, c, embeddings.row(k).data(), ga);
      simd::axpy(d, c, za, grad->row(k).data());
    }
  }
  return loss;
}

PerSampleLoss per_sample_loss(const Matrix& embeddings, const ContrastSets& sets, double tau) {
  PerSampleLoss out;
  out.grad = Matrix(embeddings.rows(), embeddings.cols());
  const Matrix sim = similarity_matrix(embeddings);
  out.loss = per_sample_loss_accumulate(embeddings, sim, sets, tau, &out.grad, 1.0);
  return out;
}

Alignment decompose_alignment(const Matrix& embeddings, const ContrastSets& sets, double tau) {
  check_temperature(tau);
  validate_sets(sets, embeddings.rows());
  const Matrix sim = similarity_matrix(embeddings);
  const auto row = sim.row(sets.anchor);
  const double lse = negatives_log_sum_exp(row, sets, tau);
  const double inv_p = 1.0 / static_cast<double>(sets.positives.size());
  Alignment a;
  double align = 0.0;
  double uni = 0.0;
  for (auto k : sets.positives) {
    align += row[k] / tau;
    uni += lse;
  }
  a.alignment = -align * inv_p;
  a.uniformity = uni * inv_p;
  return a;
}

}  // namespace opencon::objective
