#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "ros/interval_map.hpp"
#include "ros/kernels.hpp"
#include "ros/rng.hpp"
#include "ros/transfer.hpp"

using namespace ros;

namespace {

CsrMatrix sample_matrix(std::size_t n) {
  // A realistic sparsity pattern: the transfer matrix of a three-branch map.
  return build_transfer_matrix(make_example1_map(2.0), {1.0}, n).m;
}

}  // namespace

TEST_CASE("matrix-vector kernels agree across variants") {
  for (std::size_t n : {5u, 64u, 257u}) {
    CsrMatrix m = sample_matrix(n);
    Stream st(7, n);
    std::vector<double> x(n), y_ref(n), y_dispatch(n), y_avx(n);
    for (double& v : x) v = st.uniform() - 0.3;
    csr_matvec_scalar(m, x.data(), y_ref.data());
    csr_matvec(m, x.data(), y_dispatch.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y_dispatch[i] == doctest::Approx(y_ref[i]).epsilon(1e-14));
    if (cpu_has_avx2()) {
      csr_matvec_avx2(m, x.data(), y_avx.data());
      for (std::size_t i = 0; i < n; ++i)
        CHECK(y_avx[i] == doctest::Approx(y_ref[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("elementwise product kernels agree across variants") {
  for (std::size_t n : {1u, 8u, 100u, 1023u}) {
    Stream st(13, n);
    std::vector<double> a(n), b(n), ref(n), got(n), avx(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = st.uniform() - 0.5;
      b[i] = st.uniform() * 3.0;
    }
    hadamard_scalar(n, a.data(), b.data(), ref.data());
    hadamard(n, a.data(), b.data(), got.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == ref[i]);
    if (cpu_has_avx2()) {
      hadamard_avx2(n, a.data(), b.data(), avx.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(avx[i] == ref[i]);
    }
  }
}

TEST_CASE("the dispatcher reports the variant it resolved to") {
  std::string v = kernel_variant();
  if (cpu_has_avx2())
    CHECK(v == "avx2");
  else
    CHECK(v == "scalar");
}
