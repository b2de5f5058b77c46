#include <doctest.h>

#include <cstring>
#include <vector>

#include "helpers.hpp"
#include "opencon/core/error.hpp"
#include "opencon/simd/kernels.hpp"

using namespace opencon;
using namespace opencon::simd;

namespace {

std::vector<Backend> vector_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Avx2, Backend::Neon})
    if (backend_available(b)) out.push_back(b);
  return out;
}

std::vector<double> randoms(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * 3.0;
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar reference kernels compute their definitions") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};  // 2 x 3
  const std::vector<double> x{1, 0, -1}, g{2, -1};
  std::vector<double> y(2), yt(3);
  scalar::table.matvec(a.data(), 2, 3, x.data(), y.data());
  CHECK(y == std::vector<double>{-2, -2});
  scalar::table.matvec_t(a.data(), 2, 3, g.data(), yt.data());
  CHECK(yt == std::vector<double>{-2, -1, 0});
  std::vector<double> m(6, 0.0);
  scalar::table.outer_add(m.data(), 2, 3, g.data(), x.data());
  CHECK(m == std::vector<double>{2, 0, -2, -1, 0, 1});
  std::vector<double> acc{1, 1, 1};
  scalar::table.axpy(3, 2.0, x.data(), acc.data());
  CHECK(acc == std::vector<double>{3, 1, -1});
  std::vector<double> theta{1, 2}, v{0.5, 0.0};
  const std::vector<double> grad{1, 1};
  scalar::table.momentum_step(2, theta.data(), v.data(), grad.data(), 0.1, 0.9, 0.0);
  CHECK(v[0] == doctest::Approx(1.45));
  CHECK(theta[0] == doctest::Approx(1.0 - 0.145));
}

TEST_CASE("vector backends are bitwise identical to scalar") {
  const auto backends = vector_backends();
  if (backends.empty()) MESSAGE("no vector backend on this CPU; equivalence test is vacuous");
  Rng rng(77, Stream::Theory);
  for (Backend b : backends) {
    const KernelTable& t = table_for(b);
    CAPTURE(to_string(b));
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t rows = 1 + rng.below(37), cols = 1 + rng.below(41);
      const auto a = randoms(rows * cols, rng);
      const auto x = randoms(cols, rng), g = randoms(rows, rng);

      std::vector<double> y0(rows), y1(rows);
      scalar::table.matvec(a.data(), rows, cols, x.data(), y0.data());
      t.matvec(a.data(), rows, cols, x.data(), y1.data());
      CHECK(same_bits(y0, y1));

      std::vector<double> t0(cols), t1(cols);
      scalar::table.matvec_t(a.data(), rows, cols, g.data(), t0.data());
      t.matvec_t(a.data(), rows, cols, g.data(), t1.data());
      CHECK(same_bits(t0, t1));

      auto m0 = a, m1 = a;
      scalar::table.outer_add(m0.data(), rows, cols, g.data(), x.data());
      t.outer_add(m1.data(), rows, cols, g.data(), x.data());
      CHECK(same_bits(m0, m1));

      const double alpha = rng.normal();
      auto p0 = a, p1 = a;
      const auto q = randoms(a.size(), rng);
      scalar::table.axpy(a.size(), alpha, q.data(), p0.data());
      t.axpy(a.size(), alpha, q.data(), p1.data());
      CHECK(same_bits(p0, p1));

      auto th0 = a, th1 = a, v0 = q, v1 = q;
      const auto grad = randoms(a.size(), rng);
      scalar::table.momentum_step(a.size(), th0.data(), v0.data(), grad.data(), 0.02, 0.9, 1e-4);
      t.momentum_step(a.size(), th1.data(), v1.data(), grad.data(), 0.02, 0.9, 1e-4);
      CHECK(same_bits(th0, th1));
      CHECK(same_bits(v0, v1));
    }
  }
}

TEST_CASE("backend switching and availability") {
  const Backend before = active_backend();
  set_backend(Backend::Scalar);
  CHECK(active_backend() == Backend::Scalar);
  for (Backend b : {Backend::Avx2, Backend::Neon}) {
    if (!backend_available(b)) CHECK_THROWS_AS(set_backend(b), Error);
  }
  set_backend(before);
  CHECK(active_backend() == before);
}
