// AVX2 variants of the hot loops.  Compiled with -mavx2 -mfma in a separate
// translation unit; only reached after the runtime CPU feature check.

#include "ros/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace ros {

#if defined(__x86_64__) || defined(__i386__)

void csr_matvec_avx2(const CsrMatrix& m, const double* x, double* y) {
  for (std::size_t i = 0; i < m.n; ++i) {
    std::uint32_t k = m.row_ptr[i];
    const std::uint32_t end = m.row_ptr[i + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&m.col[k]));
      __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      __m256d vv = _mm256_loadu_pd(&m.val[k]);
      acc = _mm256_fmadd_pd(vv, xv, acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; k < end; ++k) s += m.val[k] * x[m.col[k]];
    y[i] = s;
  }
}

void hadamard_avx2(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d av = _mm256_loadu_pd(a + i);
    __m256d bv = _mm256_loadu_pd(b + i);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(av, bv));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

#else

void csr_matvec_avx2(const CsrMatrix& m, const double* x, double* y) {
  csr_matvec_scalar(m, x, y);
}

void hadamard_avx2(std::size_t n, const double* a, const double* b, double* out) {
  hadamard_scalar(n, a, b, out);
}

#endif

}  // namespace ros
