#include <atomic>
#include <cstdlib>
#include <string>

#include "opencon/core/error.hpp"
#include "opencon/simd/kernels.hpp"

namespace opencon::simd {

#if defined(OPENCON_HAVE_AVX2)
namespace avx2 {
extern const KernelTable table;
}
#endif
#if defined(__aarch64__)
namespace neon {
extern const KernelTable table;
}
#endif

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(OPENCON_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Backend b) {
  if (!backend_available(b)) {
    fail(ErrorCode::InvalidArgument, "SIMD backend not available: " + std::string(to_string(b)));
  }
  switch (b) {
#if defined(OPENCON_HAVE_AVX2)
    case Backend::Avx2: return avx2::table;
#endif
#if defined(__aarch64__)
    case Backend::Neon: return neon::table;
#endif
    default: return scalar::table;
  }
}

Backend detect_backend() {
  if (const char* forced = std::getenv("OPENCON_SIMD")) {
    const std::string f(forced);
    if (f == "scalar") return Backend::Scalar;
    if (f == "avx2" && backend_available(Backend::Avx2)) return Backend::Avx2;
    if (f == "neon" && backend_available(Backend::Neon)) return Backend::Neon;
  }
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

namespace {

struct Active {
  std::atomic<const KernelTable*> table;
  std::atomic<Backend> backend;
  Active() {
    const Backend b = detect_backend();
    backend.store(b);
    table.store(&table_for(b));
  }
};

Active& active() {
  static Active a;
  return a;
}

}  // namespace

Backend active_backend() { return active().backend.load(); }

void set_backend(Backend b) {
  const KernelTable& t = table_for(b);
  active().backend.store(b);
  active().table.store(&t);
}

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  active().table.load(std::memory_order_relaxed)->matvec(a, rows, cols, x, y);
}
void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* g, double* y) {
  active().table.load(std::memory_order_relaxed)->matvec_t(a, rows, cols, g, y);
}
void outer_add(double* a, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  active().table.load(std::memory_order_relaxed)->outer_add(a, rows, cols, u, v);
}
void axpy(std::size_t n, double alpha, const double* x, double* y) {
  active().table.load(std::memory_order_relaxed)->axpy(n, alpha, x, y);
}
void momentum_step(std::size_t n, double* theta, double* v, const double* g, double lr,
                   double momentum, double decay) {
  active().table.load(std::memory_order_relaxed)->momentum_step(n, theta, v, g, lr, momentum, decay);
}

}  // namespace opencon::simd
