#include "ros/kernels.hpp"

namespace ros {

void csr_matvec_scalar(const CsrMatrix& m, const double* x, double* y) {
  for (std::size_t i = 0; i < m.n; ++i) {
    double acc = 0.0;
    for (std::uint32_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
      acc += m.val[k] * x[m.col[k]];
    y[i] = acc;
  }
}

void hadamard_scalar(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

using MatvecFn = void (*)(const CsrMatrix&, const double*, double*);
using HadamardFn = void (*)(std::size_t, const double*, const double*, double*);

MatvecFn pick_matvec() { return cpu_has_avx2() ? csr_matvec_avx2 : csr_matvec_scalar; }
HadamardFn pick_hadamard() { return cpu_has_avx2() ? hadamard_avx2 : hadamard_scalar; }

}  // namespace

void csr_matvec(const CsrMatrix& m, const double* x, double* y) {
  static MatvecFn fn = pick_matvec();
  fn(m, x, y);
}

void hadamard(std::size_t n, const double* a, const double* b, double* out) {
  static HadamardFn fn = pick_hadamard();
  fn(n, a, b, out);
}

const char* kernel_variant() { return cpu_has_avx2() ? "avx2" : "scalar"; }

}  // namespace ros
