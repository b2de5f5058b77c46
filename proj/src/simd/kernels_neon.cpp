// AArch64 only; NEON is architecturally guaranteed there.
#if defined(__aarch64__)
#include <arm_neon.h>

#include "opencon/simd/kernels.hpp"

namespace opencon::simd::neon {
namespace {

// Two rows per step; lane k accumulates row k in ascending column order.
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    const double* r0 = a + r * cols;
    const double* r1 = r0 + cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      const float64x2_t v0 = vld1q_f64(r0 + j);
      const float64x2_t v1 = vld1q_f64(r1 + j);
      const float64x2_t c0 = vzip1q_f64(v0, v1);
      const float64x2_t c1 = vzip2q_f64(v0, v1);
      acc = vaddq_f64(acc, vmulq_f64(c0, vdupq_n_f64(x[j])));
      acc = vaddq_f64(acc, vmulq_f64(c1, vdupq_n_f64(x[j + 1])));
    }
    for (; j < cols; ++j) {
      const double pair[2] = {r0[j], r1[j]};
      acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(pair), vdupq_n_f64(x[j])));
    }
    vst1q_f64(y + r, acc);
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
  for (; j + 2 <= cols; j += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + r * cols + j), vdupq_n_f64(g[r])));
    }
    vst1q_f64(y + j, acc);
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
    const float64x2_t ur = vdupq_n_f64(u[r]);
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      vst1q_f64(row + j, vaddq_f64(vld1q_f64(row + j), vmulq_f64(ur, vld1q_f64(v + j))));
    }
    for (; j < cols; ++j) row[j] += u[r] * v[j];
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void momentum_step(std::size_t n, double* theta, double* v, const double* g, double lr,
                   double momentum, double decay) {
  const float64x2_t vm = vdupq_n_f64(momentum);
  const float64x2_t vd = vdupq_n_f64(decay);
  const float64x2_t vl = vdupq_n_f64(lr);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t th = vld1q_f64(theta + i);
    float64x2_t vel = vaddq_f64(vmulq_f64(vm, vld1q_f64(v + i)), vld1q_f64(g + i));
    vel = vaddq_f64(vel, vmulq_f64(vd, th));
    vst1q_f64(v + i, vel);
    vst1q_f64(theta + i, vsubq_f64(th, vmulq_f64(vl, vel)));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + decay * theta[i];
    theta[i] -= lr * v[i];
  }
}

}  // namespace

extern const KernelTable table;
const KernelTable table{matvec, matvec_t, outer_add, axpy, momentum_step};

}  // namespace opencon::simd::neon
#endif
