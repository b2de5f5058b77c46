#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "opencon/core/error.hpp"
#include "opencon/objective/contrast.hpp"
#include "opencon/objective/losses.hpp"

using namespace opencon;
using namespace opencon::objective;

namespace {

// Direct evaluation of the per-anchor contrastive loss, written independently
// of the library (no shared similarity matrix, no log-sum-exp helper).
double oracle_loss(const Matrix& z, const ContrastSets& s, double tau) {
  double denom = 0.0;
  for (auto n : s.negatives) {
    double sim = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) sim += z(s.anchor, j) * z(n, j);
    denom += std::exp(sim / tau);
  }
  double total = 0.0;
  for (auto p : s.positives) {
    double sim = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) sim += z(s.anchor, j) * z(p, j);
    total += std::log(std::exp(sim / tau) / denom);
  }
  return -total / static_cast<double>(s.positives.size());
}

template <class F>
std::vector<double> numeric_embedding_grad(Matrix z, F&& f, double h = 1e-5) {
  std::vector<double> g;
  for (double& x : z.storage()) {
    const double keep = x;
    x = keep + h;
    const double up = f(z);
    x = keep - h;
    const double down = f(z);
    x = keep;
    g.push_back((up - down) / (2 * h));
  }
  return g;
}

Matrix e_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (auto row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

}  // namespace

TEST_CASE("per-sample loss hand example and decomposition") {
  // z = e1, P = {e1}, N = {e1, e2}, tau = 1
  const Matrix z = e_rows({{1, 0}, {1, 0}, {0, 1}});
  const ContrastSets s{0, {1}, {1, 2}};
  const auto l = per_sample_loss(z, s, 1.0);
  CHECK(l.loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(l.loss == doctest::Approx(0.31326).epsilon(1e-5));
  const Alignment a = decompose_alignment(z, s, 1.0);
  CHECK(a.alignment == doctest::Approx(-1.0));
  CHECK(a.uniformity == doctest::Approx(std::log(std::exp(1.0) + 1.0)));
}

TEST_CASE("identical embeddings give log|N|") {
  Matrix z(5, 3);
  for (std::size_t i = 0; i < 5; ++i) z(i, 1) = 1.0;
  const ContrastSets s{0, {1, 2}, {1, 2, 3, 4}};
  for (double tau : {0.1, 0.7, 3.0}) CHECK(per_sample_loss(z, s, tau).loss == doctest::Approx(std::log(4.0)));
}

TEST_CASE("per-sample loss matches the oracle and L = L_a + L_b on random instances") {
  Rng rng(12, Stream::Theory);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(10), d = 2 + rng.below(8);
    const Matrix z = testing::random_unit_rows(n, d, rng);
    ContrastSets s;
    s.anchor = rng.below(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == s.anchor) continue;
      s.negatives.push_back(i);
      if (rng.bernoulli(0.4)) s.positives.push_back(i);
    }
    if (s.positives.empty()) s.positives.push_back(s.negatives.front());
    const double tau = 0.05 + rng.uniform();
    const double l = per_sample_loss(z, s, tau).loss;
    CHECK(testing::rel_error(l, oracle_loss(z, s, tau)) < 1e-10);
    const Alignment a = decompose_alignment(z, s, tau);
    CHECK(std::abs(l - (a.alignment + a.uniformity)) < 1e-12);
    // L_b is at least the largest negative similarity over tau.
    double best = -INFINITY;
    for (auto k : s.negatives) best = std::max(best, dot(z.row(s.anchor), z.row(k)) / tau);
    CHECK(a.uniformity >= best - 1e-12);
  }
}

TEST_CASE("per-sample gradient matches finite differences") {
  Rng rng(13, Stream::Theory);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 3 + rng.below(6), d = 2 + rng.below(6);
    const Matrix z = testing::random_matrix(n, d, rng, 0.5);
    ContrastSets s;
    s.anchor = rng.below(n);
    for (std::size_t i = 0; i < n; ++i)
      if (i != s.anchor) s.negatives.push_back(i);
    s.positives = {s.negatives[0], s.negatives[1]};
    const double tau = 0.2 + rng.uniform();
    const auto g = per_sample_loss(z, s, tau).grad;
    const auto fd = numeric_embedding_grad(z, [&](const Matrix& m) { return per_sample_loss(m, s, tau).loss; });
    CHECK(testing::vector_rel_error(g.storage(), fd) < 1e-6);
  }
}

TEST_CASE("raising a negative's similarity never lowers the loss") {
  Rng rng(14, Stream::Theory);
  for (int t = 0; t < 200; ++t) {
    Matrix z = testing::random_unit_rows(4, 3, rng);
    const ContrastSets s{0, {1}, {1, 2, 3}};
    const double before = per_sample_loss(z, s, 0.5).loss;
    // Move negative 2 toward the anchor.
    for (std::size_t j = 0; j < 3; ++j) z(2, j) = 0.5 * z(2, j) + 0.5 * z(0, j);
    l2_normalize_inplace(z.row(2));
    CHECK(per_sample_loss(z, s, 0.5).loss >= before - 1e-12);
  }
}

TEST_CASE("per-sample loss errors") {
  const Matrix z = e_rows({{1, 0}, {0, 1}});
  CHECK_THROWS_AS(per_sample_loss(z, {0, {}, {1}}, 1.0), Error);
  CHECK_THROWS_AS(per_sample_loss(z, {0, {1}, {1}}, 0.0), Error);
}

TEST_CASE("set builders") {
  // labels (a, a, b) -> 6 views
  const std::vector<int> labels{0, 0, 0, 0, 1, 1};
  const auto s = build_sets_supcon(labels, 2);
  CHECK(s.positives.size() == 3);
  CHECK(s.negatives.size() == 5);
  CHECK(std::find(s.negatives.begin(), s.negatives.end(), 2) == s.negatives.end());

  const auto one = build_sets_supcon(std::vector<int>{4, 4}, 0);
  CHECK(one.positives == std::vector<std::size_t>{1});
  CHECK(one.negatives.size() == 1);

  // Distinct labels degenerate to the sibling pairing.
  const std::vector<int> distinct{0, 0, 1, 1, 2, 2};
  for (std::size_t a = 0; a < 6; ++a) {
    CHECK(build_sets_supcon(distinct, a).positives == build_sets_simclr(6, a).positives);
  }
  for (std::size_t b = 1; b <= 5; ++b) {
    for (std::size_t a = 0; a < 2 * b; ++a) {
      const auto u = build_sets_simclr(2 * b, a);
      CHECK(u.positives.size() == 1);
      CHECK(u.negatives.size() == 2 * b - 1);
      const auto back = build_sets_simclr(2 * b, u.positives[0]);
      CHECK(back.positives[0] == a);
    }
  }

  const std::vector<int> same{3, 3, 3, 3};
  CHECK(build_sets_novel(same, 1).positives.size() == 3);
  const std::vector<int> pairs{1, 1, 2, 2};
  CHECK(build_sets_novel(pairs, 0).positives.size() == 1);
  const std::vector<int> shared{1, 1, 1, 1};
  CHECK(build_sets_novel(shared, 0).positives.size() == 3);
  const std::vector<int> lonely{1, 2, 2, 2};
  try {
    build_sets_novel(lonely, 0);
    FAIL("expected EmptyPositiveSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPositiveSet);
  }
}

TEST_CASE("simclr with one sample and identical views is zero") {
  const Matrix z = e_rows({{0.6, 0.8}, {0.6, 0.8}});
  for (double tau : {0.1, 1.0}) CHECK(std::abs(loss_simclr(z, tau).value) < 1e-15);
}

TEST_CASE("novel loss: empty, single pair, and sum of per-sample losses") {
  CHECK(loss_novel(Matrix(0, 3), std::vector<int>{}, 0.7).value == 0.0);

  // One sample, two views, similarity s between them: each anchor has one
  // positive which is also its only negative -> loss 0; with an extra
  // negative the loss is log(1 + exp((s' - s) / tau)).
  const Matrix z = e_rows({{1, 0}, {0.6, 0.8}, {0, 1}});
  const std::vector<int> pl{5, 5, 9};
  const auto l = loss_novel(z, pl, 0.7, Reduction::Sum);
  const double expected = std::log(1.0 + std::exp((0.0 - 0.6) / 0.7)) + std::log(1.0 + std::exp((0.8 - 0.6) / 0.7));
  CHECK(l.value == doctest::Approx(expected).epsilon(1e-13));
  CHECK(l.anchors == 2);

  Rng rng(15, Stream::Theory);
  const Matrix r = testing::random_unit_rows(10, 4, rng);
  const std::vector<int> labels{0, 0, 1, 1, 0, 0, 2, 2, 1, 3};
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t a = 0; a < 10; ++a) {
    try {
      sum += oracle_loss(r, build_sets_novel(labels, a), 0.7);
      ++used;
    } catch (const Error&) {
    }
  }
  const auto ln = loss_novel(r, labels, 0.7, Reduction::Sum);
  CHECK(ln.anchors == used);
  CHECK(std::abs(ln.value - sum) < 1e-12);
  CHECK(std::abs(loss_novel(r, labels, 0.7).value - sum / used) < 1e-12);
}

TEST_CASE("batch losses are invariant to view order") {
  Rng rng(16, Stream::Theory);
  for (int t = 0; t < 50; ++t) {
    const std::size_t b = 2 + rng.below(5);
    const Matrix z = testing::random_unit_rows(2 * b, 5, rng);
    std::vector<int> labels(2 * b);
    for (std::size_t i = 0; i < b; ++i) labels[2 * i] = labels[2 * i + 1] = static_cast<int>(rng.below(3));
    // Permute samples (keeping view pairs adjacent).
    std::vector<std::size_t> order(b);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    Matrix zp(2 * b, 5);
    std::vector<int> lp(2 * b);
    for (std::size_t i = 0; i < b; ++i) {
      for (int v = 0; v < 2; ++v) {
        std::copy(z.row(2 * order[i] + v).begin(), z.row(2 * order[i] + v).end(), zp.row(2 * i + v).begin());
        lp[2 * i + v] = labels[2 * order[i] + v];
      }
    }
    CHECK(std::abs(loss_supcon(z, labels, 0.1).value - loss_supcon(zp, lp, 0.1).value) < 1e-12);
    CHECK(std::abs(loss_simclr(z, 0.4).value - loss_simclr(zp, 0.4).value) < 1e-12);
    CHECK(std::abs(loss_novel(z, labels, 0.7).value - loss_novel(zp, lp, 0.7).value) < 1e-12);
  }
}

TEST_CASE("kl divergence and regularizer") {
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)));
  CHECK(kl_divergence(std::vector<double>{0.25, 0.75}, std::vector<double>{0.25, 0.75}) == 0.0);
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.7, 0.7}), Error);
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), Error);

  Rng rng(17, Stream::Theory);
  for (int t = 0; t < 1000; ++t) {
    const Matrix z = testing::random_unit_rows(1 + rng.below(8), 4, rng);
    const Matrix m = testing::random_unit_rows(2 + rng.below(4), 4, rng);
    CHECK(kl_regularizer(z, m, 0.7, uniform_prior(m.rows())).value >= 0.0);
  }
}

TEST_CASE("kl regularizer gradient matches finite differences") {
  Rng rng(18, Stream::Theory);
  for (int t = 0; t < 25; ++t) {
    const Matrix z = testing::random_matrix(2 + rng.below(6), 4, rng, 0.5);
    const Matrix m = testing::random_unit_rows(2 + rng.below(5), 4, rng);
    const auto prior = uniform_prior(m.rows());
    const auto g = kl_regularizer(z, m, 0.7, prior).grad;
    const auto fd = numeric_embedding_grad(z, [&](const Matrix& x) { return kl_regularizer(x, m, 0.7, prior).value; });
    CHECK(testing::vector_rel_error(g.storage(), fd) < 1e-6);
  }
}

namespace {

struct Batch {
  Matrix z_l, z_u, protos;
  std::vector<int> labels, pseudo;
  std::vector<std::size_t> gated;
  OpenConInputs inputs() const {
    OpenConInputs in;
    in.labeled = &z_l;
    in.labels = labels;
    in.unlabeled = &z_u;
    in.gated = gated;
    in.pseudo_labels = pseudo;
    in.prototypes = &protos;
    return in;
  }
};

Batch random_batch(Rng& rng, std::size_t d = 4) {
  Batch b;
  const std::size_t nl = 1 + rng.below(4), nu = 1 + rng.below(4), k = 3 + rng.below(3);
  b.z_l = testing::random_unit_rows(2 * nl, d, rng);
  b.z_u = testing::random_unit_rows(2 * nu, d, rng);
  b.protos = testing::random_unit_rows(k, d, rng);
  for (std::size_t i = 0; i < nl; ++i) b.labels.push_back(static_cast<int>(rng.below(2))), b.labels.push_back(b.labels.back());
  for (std::size_t i = 0; i < 2 * nu; ++i) {
    b.pseudo.push_back(static_cast<int>(rng.below(k)));
    if (rng.bernoulli(0.6)) b.gated.push_back(i);
  }
  return b;
}

}  // namespace

TEST_CASE("composite loss is the weighted sum of its components") {
  Rng rng(19, Stream::Theory);
  const LossWeights w;
  for (int t = 0; t < 100; ++t) {
    const Batch b = random_batch(rng);
    const auto in = b.inputs();
    const auto all = loss_opencon(in, w);
    CHECK(std::abs(all.total - (0.2 * all.loss_l + 1.0 * all.loss_u + 0.1 * all.loss_n + 0.05 * all.kl)) < 1e-12);

    // Each dropped term contributes nothing to value or gradient.
    LossToggles only_u;
    only_u.use_l = only_u.use_n = only_u.use_kl = false;
    const auto u = loss_opencon(in, w, only_u);
    CHECK(u.loss_l == 0.0);
    CHECK(u.loss_n == 0.0);
    CHECK(u.kl == 0.0);
    for (double g : u.grad_labeled.storage()) CHECK(g == 0.0);
    const auto simclr = loss_simclr(b.z_u, w.tau_u);
    CHECK(u.total == doctest::Approx(simclr.value).epsilon(1e-14));
    CHECK(testing::vector_rel_error(u.grad_unlabeled.storage(), simclr.grad.storage()) < 1e-14);

    // Gradient linearity across components.
    LossToggles no_u = {};
    no_u.use_u = false;
    const auto rest = loss_opencon(in, w, no_u);
    std::vector<double> sum = rest.grad_unlabeled.storage();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += simclr.grad.storage()[i];
    CHECK(testing::vector_rel_error(sum, all.grad_unlabeled.storage()) < 1e-12);
  }
}

TEST_CASE("default weights, arithmetic example, validation") {
  const LossWeights w;
  CHECK(w.lambda_n == 0.1);
  CHECK(w.tau_n == 0.7);
  CHECK(w.lambda_l == 0.2);
  CHECK(w.tau_l == 0.1);
  CHECK(w.lambda_u == 1.0);
  CHECK(w.tau_u == 0.4);
  CHECK(w.kl_weight == 0.05);
  CHECK(w.lambda_l * 2.0 + w.lambda_u * 3.0 + w.lambda_n * 4.0 == doctest::Approx(3.8));
  LossWeights bad;
  bad.tau_u = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.lambda_n = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero lambda_n and lambda_l leave pure SimCLR") {
  Rng rng(20, Stream::Theory);
  const Batch b = random_batch(rng);
  LossWeights w;
  w.lambda_n = w.lambda_l = w.kl_weight = 0.0;
  const auto l = loss_opencon(b.inputs(), w);
  CHECK(l.total == doctest::Approx(loss_simclr(b.z_u, w.tau_u).value).epsilon(1e-14));
}

TEST_CASE("modified loss") {
  Rng rng(21, Stream::Theory);
  const LossWeights w;
  for (int t = 0; t < 50; ++t) {
    Batch b = random_batch(rng);
    // Everything gated: L_known reduces to L_l.
    b.gated.clear();
    for (std::size_t i = 0; i < b.z_u.rows(); ++i) b.gated.push_back(i);
    const auto m = loss_modified(b.inputs(), w);
    const auto o = loss_opencon(b.inputs(), w);
    CHECK(m.loss_l == o.loss_l);
    CHECK(m.total == o.total);
  }

  // A rejected unlabeled sample pseudo-labeled 0 joins label-0 positives.
  Batch b;
  b.z_l = testing::random_unit_rows(4, 3, rng);
  b.labels = {0, 0, 1, 1};
  b.z_u = testing::random_unit_rows(2, 3, rng);
  b.pseudo = {0, 0};
  b.protos = testing::random_unit_rows(3, 3, rng);
  const auto m = loss_modified(b.inputs(), w);
  Matrix zk(6, 3);
  for (std::size_t i = 0; i < 4; ++i) std::copy(b.z_l.row(i).begin(), b.z_l.row(i).end(), zk.row(i).begin());
  for (std::size_t i = 0; i < 2; ++i) std::copy(b.z_u.row(i).begin(), b.z_u.row(i).end(), zk.row(4 + i).begin());
  const std::vector<int> lk{0, 0, 1, 1, 0, 0};
  CHECK(build_sets_supcon(lk, 0).positives.size() == 3);
  CHECK(m.loss_l == doctest::Approx(loss_supcon(zk, lk, w.tau_l).value).epsilon(1e-13));
}

TEST_CASE("batch loss gradients match finite differences") {
  Rng rng(22, Stream::Theory);
  const LossWeights w;
  for (int t = 0; t < 20; ++t) {
    const Batch b = random_batch(rng);
    auto check = [&](auto&& f, const Matrix& z, const Matrix& grad) {
      const auto fd = numeric_embedding_grad(z, f);
      CHECK(testing::vector_rel_error(grad.storage(), fd) < 1e-6);
    };
    check([&](const Matrix& z) { return loss_supcon(z, b.labels, w.tau_l).value; }, b.z_l,
          loss_supcon(b.z_l, b.labels, w.tau_l).grad);
    check([&](const Matrix& z) { return loss_simclr(z, w.tau_u).value; }, b.z_u, loss_simclr(b.z_u, w.tau_u).grad);
    check([&](const Matrix& z) { return loss_novel(z, b.pseudo, w.tau_n).value; }, b.z_u,
          loss_novel(b.z_u, b.pseudo, w.tau_n).grad);
    const auto total = loss_opencon(b.inputs(), w);
    check(
        [&](const Matrix& z) {
          Batch c = b;
          c.z_u = z;
          return loss_opencon(c.inputs(), w).total;
        },
        b.z_u, total.grad_unlabeled);
    check(
        [&](const Matrix& z) {
          Batch c = b;
          c.z_l = z;
          return loss_opencon(c.inputs(), w).total;
        },
        b.z_l, total.grad_labeled);
  }
}
