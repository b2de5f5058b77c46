#pragma once

// Data-parallel kernels behind a runtime-selected backend.
//
// Every vector backend must reproduce the scalar reference bit for bit. The
// kernels are vectorized across independent outputs ("one lane per output"),
// never across a reduction, so each output still accumulates its terms in
// ascending index order starting from 0.0. All translation units are built
// with -ffp-contract=off so no backend fuses a multiply into an add.

#include <cstddef>
#include <string_view>

namespace opencon::simd {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b);

struct KernelTable {
  // y[r] = sum_j a[r * cols + j] * x[j]
  void (*matvec)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y[j] = sum_r a[r * cols + j] * g[r]
  void (*matvec_t)(const double* a, std::size_t rows, std::size_t cols, const double* g, double* y);
  // a[r * cols + j] += u[r] * v[j]
  void (*outer_add)(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v);
  // y[i] += alpha * x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // v[i] = momentum * v[i] + g[i] + decay * theta[i];  theta[i] -= lr * v[i]
  void (*momentum_step)(std::size_t n, double* theta, double* v, const double* g, double lr,
                        double momentum, double decay);
};

namespace scalar {
extern const KernelTable table;
}

bool backend_available(Backend b);
// Best backend supported by the running CPU (or forced by OPENCON_SIMD).
Backend detect_backend();
// Table for an explicit backend; throws InvalidArgument when unavailable.
const KernelTable& table_for(Backend b);

Backend active_backend();
void set_backend(Backend b);

// Convenience wrappers over the active table.
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* g, double* y);
void outer_add(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void momentum_step(std::size_t n, double* theta, double* v, const double* g, double lr,
                   double momentum, double decay);

}  // namespace opencon::simd
