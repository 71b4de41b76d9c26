#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ros {

// Hot numeric loops used by the grid transfer operator.  A scalar reference
// implementation always exists; an AVX2 variant (separate translation unit,
// compiled with -mavx2) is selected at runtime when the CPU supports it.
// The two are equivalence-tested against each other.

struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::uint32_t> row_ptr;  // n+1
  std::vector<std::uint32_t> col;
  std::vector<double> val;
};

void csr_matvec_scalar(const CsrMatrix& m, const double* x, double* y);
void csr_matvec_avx2(const CsrMatrix& m, const double* x, double* y);

void hadamard_scalar(std::size_t n, const double* a, const double* b, double* out);
void hadamard_avx2(std::size_t n, const double* a, const double* b, double* out);

bool cpu_has_avx2();

// Dispatched entry points.
void csr_matvec(const CsrMatrix& m, const double* x, double* y);
void hadamard(std::size_t n, const double* a, const double* b, double* out);

// Which variant the dispatcher resolved to ("scalar" or "avx2").
const char* kernel_variant();

}  // namespace ros
