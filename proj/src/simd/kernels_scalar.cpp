#include "opencon/simd/kernels.hpp"

namespace opencon::simd::scalar {
namespace {

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[r] = acc;
  }
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* g, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    const double gr = g[r];
    for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * gr;
  }
}

void outer_add(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const double ur = u[r];
    for (std::size_t j = 0; j < cols; ++j) row[j] += ur * v[j];
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void momentum_step(std::size_t n, double* theta, double* v, const double* g, double lr,
                   double momentum, double decay) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + decay * theta[i];
    theta[i] -= lr * v[i];
  }
}

}  // namespace

const KernelTable table{matvec, matvec_t, outer_add, axpy, momentum_step};

}  // namespace opencon::simd::scalar
