// Built with -mavx2 (no -mfma). Only reached after a runtime CPU check.
#include <immintrin.h>

#include "opencon/simd/kernels.hpp"

namespace opencon::simd::avx2 {
namespace {

// Four rows at a time; a 4x4 transpose turns four row-contiguous loads into
// one vector per column, so lane k accumulates row k in ascending column order.
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* r0 = a + (r + 0) * cols;
    const double* r1 = a + (r + 1) * cols;
    const double* r2 = a + (r + 2) * cols;
    const double* r3 = a + (r + 3) * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d v0 = _mm256_loadu_pd(r0 + j);
      const __m256d v1 = _mm256_loadu_pd(r1 + j);
      const __m256d v2 = _mm256_loadu_pd(r2 + j);
      const __m256d v3 = _mm256_loadu_pd(r3 + j);
      const __m256d t0 = _mm256_unpacklo_pd(v0, v1);  // r0[j] r1[j] r0[j+2] r1[j+2]
      const __m256d t1 = _mm256_unpackhi_pd(v0, v1);  // r0[j+1] r1[j+1] r0[j+3] r1[j+3]
      const __m256d t2 = _mm256_unpacklo_pd(v2, v3);
      const __m256d t3 = _mm256_unpackhi_pd(v2, v3);
      const __m256d c0 = _mm256_permute2f128_pd(t0, t2, 0x20);
      const __m256d c1 = _mm256_permute2f128_pd(t1, t3, 0x20);
      const __m256d c2 = _mm256_permute2f128_pd(t0, t2, 0x31);
      const __m256d c3 = _mm256_permute2f128_pd(t1, t3, 0x31);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(c0, _mm256_set1_pd(x[j + 0])));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(c1, _mm256_set1_pd(x[j + 1])));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(c2, _mm256_set1_pd(x[j + 2])));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(c3, _mm256_set1_pd(x[j + 3])));
    }
    for (; j < cols; ++j) {
      const __m256d c = _mm256_setr_pd(r0[j], r1[j], r2[j], r3[j]);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(c, _mm256_set1_pd(x[j])));
    }
    _mm256_storeu_pd(y + r, acc);
  }
  for (; r < rows; ++r) {
    const double* row = a + r * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[r] = acc;
  }
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* g, double* y) {
  std::size_t j = 0;
  for (; j + 8 <= cols; j += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = a + r * cols + j;
      const __m256d gr = _mm256_set1_pd(g[r]);
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(row), gr));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(row + 4), gr));
    }
    _mm256_storeu_pd(y + j, acc0);
    _mm256_storeu_pd(y + j + 4, acc1);
  }
  for (; j + 4 <= cols; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + r * cols + j), _mm256_set1_pd(g[r])));
    }
    _mm256_storeu_pd(y + j, acc);
  }
  for (; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += a[r * cols + j] * g[r];
    y[j] = acc;
  }
}

void outer_add(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const __m256d ur = _mm256_set1_pd(u[r]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d cur = _mm256_loadu_pd(row + j);
      _mm256_storeu_pd(row + j, _mm256_add_pd(cur, _mm256_mul_pd(ur, _mm256_loadu_pd(v + j))));
    }
    for (; j < cols; ++j) row[j] += u[r] * v[j];
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d cur = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(cur, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void momentum_step(std::size_t n, double* theta, double* v, const double* g, double lr,
                   double momentum, double decay) {
  const __m256d vm = _mm256_set1_pd(momentum);
  const __m256d vd = _mm256_set1_pd(decay);
  const __m256d vl = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d th = _mm256_loadu_pd(theta + i);
    __m256d vel = _mm256_add_pd(_mm256_mul_pd(vm, _mm256_loadu_pd(v + i)), _mm256_loadu_pd(g + i));
    vel = _mm256_add_pd(vel, _mm256_mul_pd(vd, th));
    _mm256_storeu_pd(v + i, vel);
    _mm256_storeu_pd(theta + i, _mm256_sub_pd(th, _mm256_mul_pd(vl, vel)));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + decay * theta[i];
    theta[i] -= lr * v[i];
  }
}

}  // namespace

extern const KernelTable table;
const KernelTable table{matvec, matvec_t, outer_add, axpy, momentum_step};

}  // namespace opencon::simd::avx2
