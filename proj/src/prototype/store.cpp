#include "opencon/prototype/store.hpp"

#include <algorithm>
#include <cmath>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/core/vmf.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::prototype {

void PrototypeStore::reset_counts() { std::fill(assignment_counts.begin(), assignment_counts.end(), 0); }

PrototypeStore init_prototypes(std::size_t n_classes, std::size_t n_known, std::size_t dim, Rng& rng) {
  if (n_classes == 0) fail(ErrorCode::InvalidArgument, "need at least one prototype");
  if (n_known > n_classes) fail(ErrorCode::InvalidArgument, "more known classes than prototypes");
  PrototypeStore s;
  s.means = Matrix(n_classes, dim);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const Vec u = random_unit(dim, rng);
    std::copy(u.begin(), u.end(), s.means.row(c).begin());
    (c < n_known ? s.known_ids : s.novel_ids).push_back(c);
  }
  s.assignment_counts.assign(n_classes, 0);
  return s;
}

namespace {

void check_width(std::span<const double> z, const PrototypeStore& store) {
  if (z.size() != store.dim()) fail(ErrorCode::DimensionMismatch, "embedding width differs from prototypes");
}

}  // namespace

int pseudo_label(std::span<const double> z, const PrototypeStore& store, Restrict restrict) {
  check_width(z, store);
  Vec scores(store.num_classes());
  simd::matvec(store.means.data(), store.num_classes(), store.dim(), z.data(), scores.data());
  int best = -1;
  double best_score = -INFINITY;
  auto consider = [&](std::size_t c) {
    if (best < 0 || scores[c] > best_score || (scores[c] == best_score && static_cast<int>(c) < best)) {
      best = static_cast<int>(c);
      best_score = scores[c];
    }
  };
  switch (restrict) {
    case Restrict::All:
      for (std::size_t c = 0; c < scores.size(); ++c) consider(c);
      break;
    case Restrict::Novel:
      for (auto c : store.novel_ids) consider(c);
      break;
    case Restrict::Known:
      for (auto c : store.known_ids) consider(c);
      break;
  }
  return best;
}

double known_score(std::span<const double> z, const PrototypeStore& store) {
  check_width(z, store);
  double best = -INFINITY;
  for (auto c : store.known_ids) best = std::max(best, dot(store.means.row(c), z));
  return best;
}

void moving_average_update(PrototypeStore& store, std::size_t c, std::span<const double> z, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorCode::InvalidArgument, "gamma must lie in [0, 1)");
  check_width(z, store);
  auto mu = store.means.row(c);
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = gamma * mu[i] + (1.0 - gamma) * z[i];
  l2_normalize_inplace(mu);
  ++store.assignment_counts[c];
}

void update_prototypes(PrototypeStore& store, const Matrix& labeled, std::span<const int> labels,
                       const Matrix& unlabeled, std::span<const std::size_t> gated, double gamma) {
  if (labels.size() != labeled.rows()) fail(ErrorCode::ShapeMismatch, "one label per labeled view");
  for (std::size_t i = 0; i < labeled.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= store.known_ids.size()) {
      fail(ErrorCode::InvalidArgument, "labeled view with a label outside Y_l");
    }
    moving_average_update(store, store.known_ids[static_cast<std::size_t>(y)], labeled.row(i), gamma);
  }
  if (store.novel_ids.empty()) return;
  std::vector<std::size_t> order(gated.begin(), gated.end());
  std::sort(order.begin(), order.end());
  for (auto v : order) {
    const auto z = unlabeled.row(v);
    const int c = pseudo_label(z, store, Restrict::Novel);
    moving_average_update(store, static_cast<std::size_t>(c), z, gamma);
  }
}

void warm_start_known(PrototypeStore& store, const Matrix& embeddings, std::span<const int> labels) {
  if (labels.size() != embeddings.rows()) fail(ErrorCode::ShapeMismatch, "one label per embedding");
  const std::size_t n_known = store.known_ids.size();
  Matrix sums(n_known, store.dim());
  std::vector<std::size_t> counts(n_known, 0);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= n_known) continue;
    simd::axpy(store.dim(), 1.0, embeddings.row(i).data(), sums.row(static_cast<std::size_t>(y)).data());
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < n_known; ++c) {
    if (counts[c] == 0 || !(norm(sums.row(c)) > kNormEpsilon)) continue;
    l2_normalize_inplace(sums.row(c));
    std::copy(sums.row(c).begin(), sums.row(c).end(), store.means.row(store.known_ids[c]).begin());
  }
}

}  // namespace opencon::prototype
