#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pdetkit/io.hpp"
#include "pdetkit/kernels.hpp"
#include "pdetkit/oracle.hpp"
#include "pdetkit/random.hpp"

using namespace pdetkit;

namespace {

DenseMatrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return random_gaussian(r, c, rng);
}

double identity_gap(const DenseMatrix& a) { return max_abs(a - DenseMatrix::identity(a.rows())); }

}  // namespace

TEST_CASE("matrix construction and shape checks") {
  DenseMatrix a{{1, 2, 3}, {4, 5, 6}};
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a.size() == 6);
  CHECK(a(1, 2) == 6);
  CHECK(a.transpose()(2, 1) == 6);
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(DenseMatrix(1, 1, std::vector<double>{NAN}), Error);
  CHECK_THROWS_AS(matmul(a, a), Error);

  const DenseMatrix empty(4, 0);
  CHECK(empty.rows() == 4);
  CHECK(matmul(empty, DenseMatrix(0, 3)) == DenseMatrix(4, 3));
}

TEST_CASE("cholesky") {
  SUBCASE("identity") {
    const CholFactor f = cholesky(DenseMatrix::identity(3));
    CHECK(f.L == DenseMatrix::identity(3));
  }
  SUBCASE("hand-checked 2x2") {
    const CholFactor f = cholesky(DenseMatrix{{4, 2}, {2, 5}});
    CHECK(f.L == DenseMatrix{{2, 0}, {1, 2}});
  }
  SUBCASE("random SPD reconstruction") {
    const DenseMatrix a = random_spd(16, 0.1, 10, 3);
    const DenseMatrix l = cholesky(a).L;
    for (std::size_t i = 0; i < 16; ++i) {
      CHECK(l(i, i) > 0);
      for (std::size_t j = i + 1; j < 16; ++j) CHECK(l(i, j) == 0.0);
    }
    CHECK(relative_difference(matmul(l, l.transpose()), a) < 1e-12);
  }
  SUBCASE("rejects indefinite and nonsymmetric input") {
    try {
      cholesky(random_indefinite(8, 1));
      FAIL("expected NotSPD");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotSPD);
    }
    CHECK_FALSE(try_cholesky(DenseMatrix{{1, 2}, {2, 1}}).has_value());
    CHECK_THROWS_AS(cholesky(DenseMatrix{{2, 1}, {0, 2}}), Error);
  }
}

TEST_CASE("LU with partial pivoting") {
  SUBCASE("permutation matrix") {
    const DenseMatrix a{{0, 1}, {1, 0}};
    const LUFactors f = lu_partial_pivot(a);
    CHECK(f.perm == std::vector<std::size_t>{1, 0});
    CHECK(f.parity == -1);
    const SignedLogDet d = logdet_triangular(f);
    CHECK(d.sign == -1);
    CHECK(d.logabs == doctest::Approx(0.0));
  }
  SUBCASE("identity") {
    const LUFactors f = lu_partial_pivot(DenseMatrix::identity(5));
    CHECK(f.L == DenseMatrix::identity(5));
    CHECK(f.U == DenseMatrix::identity(5));
    CHECK(f.parity == 1);
  }
  SUBCASE("random reconstruction") {
    const DenseMatrix a = gaussian(16, 16, 5);
    const LUFactors f = lu_partial_pivot(a);
    CHECK(relative_difference(matmul(f.L, f.U), permute_rows(a, f.perm)) < 1e-12);
  }
  SUBCASE("singular matrix is flagged") {
    const LUFactors f = lu_partial_pivot(DenseMatrix{{1, 2}, {2, 4}});
    CHECK(f.singular);
    CHECK(logdet_triangular(f).is_zero());
  }
}

TEST_CASE("triangular solves") {
  const DenseMatrix b = gaussian(3, 2, 2);
  CHECK(solve_triangular(DenseMatrix::identity(3), b, Triangle::Lower) == b);
  const DenseMatrix z =
      solve_triangular(DenseMatrix{{2, 0}, {1, 1}}, DenseMatrix{{2}, {3}}, Triangle::Lower);
  CHECK(z == DenseMatrix{{1}, {2}});

  DenseMatrix t = gaussian(16, 16, 9);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = i + 1; j < 16; ++j) t(i, j) = 0;
    t(i, i) = 3.0 + std::abs(t(i, i));
  }
  const DenseMatrix rhs = gaussian(16, 4, 10);
  CHECK(frobenius_norm(matmul(t, solve_triangular(t, rhs, Triangle::Lower)) - rhs) <
        1e-11 * frobenius_norm(rhs));
  CHECK_THROWS_AS(solve_triangular(DenseMatrix{{0, 0}, {1, 1}}, rhs.block(0, 0, 2, 1),
                                   Triangle::Lower),
                  Error);
}

TEST_CASE("gemm and gramian") {
  const DenseMatrix x{{1}, {2}};
  CHECK(gramian(x) == DenseMatrix{{5}});
  CHECK(gramian(x, nullptr, GramMode::Full) == DenseMatrix{{5}});

  const DenseMatrix q = gram_schmidt(gaussian(20, 5, 4));
  CHECK(identity_gap(gramian(q)) < 1e-12);

  const DenseMatrix r = gaussian(16, 4, 6);
  OpCounter half, full;
  gramian(r, &half, GramMode::Half);
  gramian(r, &full, GramMode::Full);
  CHECK(2 * half.get(OpKind::Gramian) == full.get(OpKind::Gramian));

  const DenseMatrix a = gaussian(7, 5, 1), b = gaussian(7, 3, 2);
  CHECK(relative_difference(gemm(a, b, nullptr, Op::Transpose), matmul(a.transpose(), b)) <
        1e-15);
  OpCounter c;
  gemm(a, b, &c, Op::Transpose);
  CHECK(c.get(OpKind::Gemm) == 5 * 7 * 3);
  CHECK(c.total() == 5 * 7 * 3);
}

TEST_CASE("Gram-Schmidt") {
  SUBCASE("orthonormal input is kept up to signs") {
    const DenseMatrix q = gram_schmidt(gaussian(12, 4, 8));
    const DenseMatrix q2 = gram_schmidt(q);
    for (std::size_t j = 0; j < 4; ++j) {
      const auto a = q.column(j), b = q2.column(j);
      CHECK(std::abs(std::abs(dot(a, b)) - 1.0) < 1e-12);
    }
    CHECK(identity_gap(matmul(q2.transpose(), q2)) < 1e-12);
  }
  SUBCASE("2x2 by hand") {
    const DenseMatrix q = gram_schmidt(DenseMatrix{{1, 1}, {0, 1}});
    CHECK(max_abs(DenseMatrix{{std::abs(q(0, 0)), std::abs(q(0, 1))},
                              {std::abs(q(1, 0)), std::abs(q(1, 1))}} -
                  DenseMatrix::identity(2)) < 1e-15);
  }
  SUBCASE("projector equality") {
    const DenseMatrix x = gaussian(64, 16, 12);
    const DenseMatrix q = gram_schmidt(x);
    const DenseMatrix proj =
        matmul(matmul(x, inverse(matmul(x.transpose(), x))), x.transpose());
    CHECK(max_abs(matmul(q, q.transpose()) - proj) < 1e-10);
  }
  SUBCASE("rank deficiency") {
    DenseMatrix x = gaussian(6, 3, 1);
    x.set_column(2, x.column(0));
    try {
      gram_schmidt(x);
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
    }
  }
}

TEST_CASE("complement basis") {
  const DenseMatrix u0 = complement_basis(DenseMatrix(5, 0), 1);
  CHECK(u0.cols() == 5);
  CHECK(identity_gap(matmul(u0.transpose(), u0)) < 1e-12);

  const DenseMatrix u1 = complement_basis(DenseMatrix{{1}, {0}}, 2);
  CHECK(std::abs(u1(0, 0)) < 1e-15);
  CHECK(std::abs(std::abs(u1(1, 0)) - 1.0) < 1e-15);

  const DenseMatrix x = gram_schmidt(gaussian(32, 8, 3));
  const DenseMatrix full = hstack(x, complement_basis(x, 4));
  CHECK(identity_gap(matmul(full.transpose(), full)) < 1e-10);
  CHECK(complement_basis(x, 4) == complement_basis(x, 4));
}

TEST_CASE("triangular log-determinants") {
  CholFactor f{DenseMatrix::diagonal(std::vector<double>{1.0, std::exp(1.0)})};
  const SignedLogDet d = logdet_triangular(f);
  CHECK(d.sign == 1);
  CHECK(d.logabs == doctest::Approx(1.0));

  const DenseMatrix a = random_spd(16, 0.1, 10, 21);
  const auto eig = oracle::jacobi_eigen(a);
  double sum = 0;
  for (double l : eig.values) sum += std::log(l);
  CHECK(std::abs(logdet_triangular(cholesky(a)).scaled(2).logabs - sum) < 1e-9);
}

TEST_CASE("signed log-determinant arithmetic") {
  const auto a = SignedLogDet::from_value(-2.0), b = SignedLogDet::from_value(4.0);
  CHECK((a + b).value() == doctest::Approx(-8.0));
  CHECK((b - a).value() == doctest::Approx(-2.0));
  CHECK((a + SignedLogDet::zero()).is_zero());
  CHECK(SignedLogDet::from_value(0.0).is_zero());
  CHECK(SignedLogDet::zero().logabs == kNegInf);
}

TEST_CASE("generators") {
  CHECK(max_abs(random_spd(4, 1, 1, 7) - DenseMatrix::identity(4)) < 1e-12);
  CHECK(oracle::rank_oracle(random_ep(8, 8, 3)) == 8);
  CHECK(oracle::rank_oracle(random_ep(8, 5, 3)) == 5);
  const auto eig = oracle::jacobi_eigen(random_indefinite(16, 4));
  CHECK(eig.values.back() < 0);
  CHECK(eig.values.front() > 0);
  CHECK(random_general(10, 1) == random_general(10, 1));
  CHECK_FALSE(random_general(10, 1) == random_general(10, 2));
}

TEST_CASE("counters are additive and ordered by category") {
  OpCounter c;
  const DenseMatrix a = random_spd(32, 1, 2, 1);
  cholesky(a, &c);
  const auto after_chol = c.total();
  CHECK(after_chol > 0);
  lu_partial_pivot(a, &c);
  CHECK(c.total() > after_chol);
  CHECK(c.total() == c.get(OpKind::Cholesky) + c.get(OpKind::Lu));
  OpCounter d;
  d.merge(c);
  CHECK(d.total() == c.total());
}

TEST_CASE("dmx and dvx round trips") {
  const DenseMatrix m = gaussian(3, 4, 1);
  std::stringstream s;
  io::write_dmx(s, m);
  CHECK(s.str().rfind("dmx 3 4\n", 0) == 0);
  CHECK(io::read_dmx(s) == m);

  const std::vector<double> v{1.5, -2.0, 1e-300};
  std::stringstream t;
  io::write_dvx(t, v);
  CHECK(io::read_dvx(t) == v);

  std::stringstream bad("dmx 2 2\n\x01\x02");
  CHECK_THROWS_AS(io::read_dmx(bad), Error);
  CHECK_THROWS_AS(io::load_dmx("/nonexistent/file.dmx"), Error);
}
