#include <cmath>

#include "doctest.h"
#include "pdetkit/kernels.hpp"
#include "pdetkit/oracle.hpp"
#include "pdetkit/random.hpp"

using namespace pdetkit;
using namespace pdetkit::oracle;

namespace {

DenseMatrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return random_gaussian(r, c, rng);
}

}  // namespace

TEST_CASE("jacobi_eigen") {
  const auto d = jacobi_eigen(DenseMatrix{{3, 0}, {0, 1}});
  CHECK(d.values == std::vector<double>{3, 1});
  CHECK(std::abs(std::abs(d.vectors(0, 0)) - 1) < 1e-15);

  const auto s = jacobi_eigen(DenseMatrix{{0, 1}, {1, 0}});
  CHECK(s.values[0] == doctest::Approx(1.0));
  CHECK(s.values[1] == doctest::Approx(-1.0));

  const DenseMatrix a = random_spd(12, 0.5, 3, 2);
  const auto e = jacobi_eigen(a);
  double sum = 0;
  for (double l : e.values) sum += std::log(l);
  CHECK(std::abs(sum - logdet_lu(a).logabs) < 1e-9);

  // A V = V diag(lambda)
  const DenseMatrix av = matmul(a, e.vectors);
  const DenseMatrix vl = matmul(e.vectors, DenseMatrix::diagonal(e.values));
  CHECK(relative_difference(av, vl) < 1e-12);

  CHECK_THROWS_AS(jacobi_eigen(DenseMatrix{{1, 2}, {0, 1}}), Error);
  CHECK_THROWS_AS(jacobi_eigen(DenseMatrix(257, 257)), Error);
}

TEST_CASE("jacobi_svd") {
  const auto i = jacobi_svd(DenseMatrix::identity(4));
  for (double s : i.S) CHECK(s == doctest::Approx(1.0));

  const auto z = jacobi_svd(DenseMatrix{{0, 0}, {0, 2}});
  CHECK(z.S[0] == doctest::Approx(2.0));
  CHECK(z.S[1] == 0.0);

  for (auto shape : {std::pair<std::size_t, std::size_t>{8, 5}, {5, 8}}) {
    const DenseMatrix a = gaussian(shape.first, shape.second, 3);
    const auto d = jacobi_svd(a);
    const DenseMatrix rec = matmul(matmul(d.U, DenseMatrix::diagonal(d.S)), d.V.transpose());
    CHECK(frobenius_norm(a - rec) < 1e-10 * frobenius_norm(a));
    CHECK(max_abs(matmul(d.U.transpose(), d.U) - DenseMatrix::identity(d.U.cols())) < 1e-12);
  }
}

TEST_CASE("nonsymmetric eigenvalues") {
  // Rotation by 90 degrees: eigenvalues +-i.
  const auto ev = eigenvalues(DenseMatrix{{0, -1}, {1, 0}});
  REQUIRE(ev.size() == 2);
  for (const auto& l : ev) {
    CHECK(std::abs(l.real()) < 1e-14);
    CHECK(std::abs(std::abs(l.imag()) - 1) < 1e-14);
  }
  // Product of eigenvalues equals the determinant.
  const DenseMatrix a = random_general(20, 4);
  std::complex<double> prod = 1;
  double logabs = 0;
  for (const auto& l : eigenvalues(a)) {
    logabs += std::log(std::abs(l));
    prod *= l / std::abs(l);
  }
  const SignedLogDet d = logdet_lu(a);
  CHECK(std::abs(logabs - d.logabs) < 1e-9);
  CHECK(std::abs(prod.real() - d.sign) < 1e-9);
}

TEST_CASE("pinv_oracle") {
  CHECK(max_abs(pinv_oracle(DenseMatrix::identity(3)) - DenseMatrix::identity(3)) < 1e-15);
  CHECK(max_abs(pinv_oracle(DenseMatrix{{2, 0}, {0, 0}}) - DenseMatrix{{0.5, 0}, {0, 0}}) <
        1e-15);

  const DenseMatrix a = matmul(gaussian(6, 3, 4), gaussian(3, 4, 5));
  const DenseMatrix ad = pinv_oracle(a);
  const double na = frobenius_norm(a);
  CHECK(frobenius_norm(matmul(matmul(a, ad), a) - a) < 1e-9 * na);
  CHECK(relative_difference(matmul(matmul(ad, a), ad), ad) < 1e-9);
  const DenseMatrix aad = matmul(a, ad), ada = matmul(ad, a);
  CHECK(relative_asymmetry(aad) < 1e-9);
  CHECK(relative_asymmetry(ada) < 1e-9);
  CHECK(rank_oracle(a) == 3);
}

TEST_CASE("pdet_oracle") {
  const SignedLogDet z = pdet_oracle(DenseMatrix(4, 4));
  CHECK(z.sign == 1);
  CHECK(z.logabs == 0.0);

  const SignedLogDet d = pdet_oracle(DenseMatrix::diagonal(std::vector<double>{2, 0, 3}));
  CHECK(d.sign == 1);
  CHECK(d.logabs == doctest::Approx(std::log(6.0)));

  const DenseMatrix q = gram_schmidt(gaussian(7, 2, 1));
  const DenseMatrix p = DenseMatrix::identity(7) - matmul(q, q.transpose());
  const SignedLogDet pp = pdet_oracle(p);
  CHECK(pp.sign == 1);
  CHECK(std::abs(pp.logabs) < 1e-12);

  // Nilpotent: every eigenvalue is zero, so the product over an empty set is 1.
  const SignedLogDet nil = pdet_oracle(DenseMatrix{{0, 1}, {0, 0}});
  CHECK(nil.sign == 1);
  CHECK(nil.logabs == 0.0);

  // One negative eigenvalue flips the sign.
  const SignedLogDet neg = pdet_oracle(DenseMatrix::diagonal(std::vector<double>{-2, 0, 3}));
  CHECK(neg.sign == -1);
}

TEST_CASE("range and null space bases") {
  const DenseMatrix a = matmul(gaussian(8, 3, 7), gaussian(3, 6, 8));
  const DenseMatrix r = range_basis(a);
  const DenseMatrix n = null_space(a);
  CHECK(r.cols() == 3);
  CHECK(n.cols() == 3);
  CHECK(max_abs(matmul(a, n)) < 1e-12 * max_abs(a));
  CHECK(null_space(DenseMatrix(3, 4)).cols() == 4);
  CHECK(range_basis(DenseMatrix(3, 4)).cols() == 0);
}
