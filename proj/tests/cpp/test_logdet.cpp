#include <cmath>

#include "doctest.h"
#include "pdetkit/geninv.hpp"
#include "pdetkit/kernels.hpp"
#include "pdetkit/logdet.hpp"
#include "pdetkit/oracle.hpp"
#include "pdetkit/random.hpp"

using namespace pdetkit;
using namespace pdetkit::ld;

namespace {

DenseMatrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return random_gaussian(r, c, rng);
}

LdFlags flags(bool spd, bool orth) {
  LdFlags f;
  f.spd = spd;
  f.orth = orth;
  return f;
}

double scale(const LdResult& r) { return std::max(1.0, std::abs(r.value.logabs)); }

}  // namespace

TEST_CASE("identity A gives zero for orthonormal X") {
  const DenseMatrix x = gram_schmidt(gaussian(10, 4, 1));
  for (Algorithm a : kAllAlgorithms) {
    for (bool spd : {true, false}) {
      const LdResult r = run(a, DenseMatrix::identity(10), x, flags(spd, true));
      CHECK(r.value.sign == 1);
      CHECK(std::abs(r.value.logabs) < 1e-12);
    }
  }
  // A = I with general X gives logdet(X^T X).
  const DenseMatrix g = gaussian(10, 3, 2);
  const double want = logdet_lu(matmul(g.transpose(), g)).logabs;
  CHECK(ld2(DenseMatrix::identity(10), g, flags(false, false)).value.logabs ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("diag(4, 1) with X = e1 by hand") {
  const DenseMatrix a{{4, 0}, {0, 1}};
  const DenseMatrix x{{1}, {0}};
  for (Algorithm alg : kAllAlgorithms) {
    const LdResult r = run(alg, a, x, flags(true, true));
    CHECK(r.value.sign == 1);
    CHECK(std::abs(r.value.logabs) < 1e-15);
  }
}

TEST_CASE("agreement with oracles on random instances") {
  SUBCASE("ld1 vs eigenvalues plus a dense oracle") {
    const DenseMatrix a = random_spd(64, 0.1, 10, 3);
    const DenseMatrix x = gaussian(64, 16, 4);
    double want = 0;
    for (double l : oracle::jacobi_eigen(a).values) want += std::log(l);
    const DenseMatrix s = matmul(matmul(x.transpose(), oracle::pinv_oracle(a)), x);
    want += oracle::pdet_oracle(s).logabs;
    const LdResult r = ld1(a, x, flags(true, false));
    CHECK(std::abs(r.value.logabs - want) < 1e-8 * std::max(1.0, std::abs(want)));
  }
  SUBCASE("ld2 vs ld1 for non-SPD A") {
    const DenseMatrix a = random_general(64, 5);
    const DenseMatrix x = gaussian(64, 16, 6);
    const LdResult r1 = ld1(a, x, flags(false, false));
    const LdResult r2 = ld2(a, x, flags(false, false));
    CHECK(r1.value.sign == r2.value.sign);
    CHECK(std::abs(r1.value.logabs - r2.value.logabs) < 1e-7 * scale(r1));
  }
  SUBCASE("ld3 vs ld1 for SPD A at high rho") {
    const DenseMatrix a = random_spd(64, 0.1, 10, 7);
    const DenseMatrix x = gaussian(64, 48, 8);
    const LdResult r1 = ld1(a, x, flags(true, false));
    const LdResult r3 = ld3(a, x, flags(true, false));
    CHECK(std::abs(r1.value.logabs - r3.value.logabs) < 1e-7 * scale(r1));
  }
}

TEST_CASE("ld3 with p = 0 is a plain log-determinant") {
  const DenseMatrix a = random_general(12, 9);
  const LdResult r = ld3(a, DenseMatrix(12, 0), flags(false, true));
  const SignedLogDet want = logdet_lu(a);
  CHECK(r.value.sign == want.sign);
  CHECK(r.value.logabs == doctest::Approx(want.logabs).epsilon(1e-12));
}

TEST_CASE("flags are contracts") {
  const DenseMatrix x = gaussian(8, 2, 1);
  try {
    ld1(random_indefinite(8, 2), x, flags(true, false));
    FAIL("expected NotSPD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSPD);
  }
  DenseMatrix xd = gaussian(8, 3, 3);
  xd.set_column(2, xd.column(1));
  try {
    ld3(random_spd(8, 1, 2, 4), xd, flags(true, false));
    FAIL("expected RankDeficientX");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientX);
  }
  Ld3Options bad;
  bad.uperp = gaussian(8, 6, 5);
  bad.verify_inputs = true;
  CHECK_THROWS_AS(ld3(random_spd(8, 1, 2, 4), gram_schmidt(x), flags(true, true), bad), Error);
}

TEST_CASE("singular A yields sign 0 on every route") {
  const DenseMatrix a = random_ep(10, 7, 1);
  const DenseMatrix x = gaussian(10, 2, 2);
  for (Algorithm alg : kAllAlgorithms) CHECK(run(alg, a, x, flags(false, false)).value.is_zero());
}

TEST_CASE("supplied complement basis is free") {
  const DenseMatrix a = random_spd(32, 0.5, 2, 1);
  const DenseMatrix x = gram_schmidt(gaussian(32, 8, 2));
  Ld3Options opt;
  opt.uperp = complement_basis(x, 3);
  opt.verify_inputs = true;
  LdFlags f = flags(true, true);
  const LdResult charged = ld3(a, x, f);
  const LdResult free = ld3(a, x, f, opt);
  CHECK(free.counter.get(OpKind::GramSchmidt) == 0);
  CHECK(charged.counter.get(OpKind::GramSchmidt) > 0);
  CHECK(std::abs(free.value.logabs - charged.value.logabs) < 1e-10);
}

TEST_CASE("relation to the pseudo-determinant of M") {
  const DenseMatrix a = random_spd(20, 0.2, 5, 11);
  const DenseMatrix x = gaussian(20, 6, 12);
  const LdResult r = ld2(a, x, flags(true, false));
  const SignedLogDet pm = oracle::pdet_oracle(geninv::m_matrix(geninv::build(a, x, x)));
  const SignedLogDet gram = logdet_lu(matmul(x.transpose(), x));
  CHECK(std::abs(r.value.logabs + pm.logabs - gram.logabs) < 1e-8);
}

TEST_CASE("rational arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(1, 3) - Rational(1, 2) == Rational(-1, 6));
  CHECK(Rational(3, 4) * Rational(2, 3) == Rational(1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  CHECK(Rational::approximate(0.25) == Rational(1, 4));
  CHECK(Rational::approximate(1.0 / 3.0) == Rational(1, 3));
  CHECK_THROWS_AS(Rational(1, 0), Error);
}

TEST_CASE("complexity model values") {
  LdFlags spd = flags(true, false);
  CHECK(complexity_model(Algorithm::LD1, 0.0, spd) == 1.0 / 3.0);
  CHECK(complexity_model_exact(Algorithm::LD1, Rational(1), spd) == Rational(5, 3));
  CHECK(complexity_model(Algorithm::LD2, 0.0, flags(false, true)) == 2.0 / 3.0);
  LdFlags ld3f = flags(true, true);
  ld3f.delta_precomputed = true;
  CHECK(complexity_model(Algorithm::LD3, 1.0, ld3f) == 0.0);
  LdFlags g1 = flags(false, false);
  g1.gamma_half = false;
  CHECK(complexity_model(Algorithm::LD2, 1.0, g1) == 4.5);
  CHECK_THROWS_AS(complexity_model(Algorithm::LD1, 1.5, spd), Error);

  // At rho = 0, LD1 is the cheapest route for SPD A.
  for (bool orth : {true, false}) {
    const LdFlags f = flags(true, orth);
    CHECK(complexity_model(Algorithm::LD1, 0.0, f) < complexity_model(Algorithm::LD2, 0.0, f));
    CHECK(complexity_model(Algorithm::LD1, 0.0, f) < complexity_model(Algorithm::LD3, 0.0, f));
  }
}

TEST_CASE("model crossovers") {
  // Non-SPD A, orthonormal X: rho - rho^2 - 2 rho^3 / 3 = 0.
  const auto c2 = model_crossover(Algorithm::LD2, flags(false, true));
  REQUIRE(c2.has_value());
  CHECK(*c2 == doctest::Approx((-1.0 + std::sqrt(1.0 + 8.0 / 3.0)) * 0.75).epsilon(1e-9));

  // SPD, orthonormal X, precomputed basis: the LD3 root lies near one half.
  LdFlags f = flags(true, true);
  f.delta_precomputed = true;
  const auto c3 = model_crossover(Algorithm::LD3, f);
  REQUIRE(c3.has_value());
  CHECK(*c3 > 0.4);
  CHECK(*c3 < 0.6);
  for (double r = 0.0; r <= 1.0; r += 1.0 / 64) {
    const bool cheaper = complexity_model(Algorithm::LD3, r, f) < complexity_model(Algorithm::LD1, r, f);
    CHECK(cheaper == (r > *c3));
  }

  // A scan in model-only mode reproduces the roots.
  std::vector<double> grid;
  for (int k = 1; k < 64; ++k) grid.push_back(k / 64.0);
  const auto scan = crossover_scan(64, flags(false, true), grid, false);
  REQUIRE(scan.ld2_model.has_value());
  CHECK(std::abs(*scan.ld2_model - *c2) < 1.0 / 64);
}

TEST_CASE("counter totals track the model at moderate n") {
  const std::size_t n = 128;
  const BenchInstance inst = make_bench_instance(n, true, 3);
  for (double rho : {0.25, 0.5, 0.75}) {
    const std::size_t p = columns_for(rho, n);
    for (Algorithm alg : kAllAlgorithms) {
      const LdFlags f = flags(true, false);
      const LdResult r = run(alg, inst.A, design_columns(inst, p, false), f);
      const double measured = static_cast<double>(r.counter.weighted_total()) / (n * n * n);
      const double model = complexity_model(alg, static_cast<double>(p) / n, f);
      CHECK(std::abs(measured / model - 1.0) < 0.15);
    }
  }
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("ld2") == Algorithm::LD2);
  CHECK(parse_algorithm("LD3") == Algorithm::LD3);
  CHECK_FALSE(parse_algorithm("ld4").has_value());
  CHECK(std::string(to_string(Algorithm::LD1)) == "LD1");
  CHECK(columns_for(0.0001, 100) == 1);
  CHECK(columns_for(0.9999, 100) == 99);
}
