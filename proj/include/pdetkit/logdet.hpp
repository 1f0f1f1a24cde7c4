// logdet(A, X) := logdet(A) + logdet(X^T A^{-1} X) by three routes:
//
//   LD1  logdet(A) + logdet(X^T A^{-1} X)
//   LD2  logdet(X^T X) + logdet(N),            N = A - (A - I) X (X^T X)^{-1} X^T
//   LD3  logdet(X^T X) + logdet(U^T A U),      U orthonormal basis of X^perp
//
// Each run records MACs per kernel category and the wall time of the
// algorithm body. The analytic cost model (per n^3, rho = p / n) is
// evaluated in exact rational arithmetic.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdetkit/matrix.hpp"

namespace pdetkit::ld {

enum class Algorithm { LD1, LD2, LD3 };
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::LD1, Algorithm::LD2, Algorithm::LD3};

const char* to_string(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name);

// Caller declarations. They are contracts: spd = true on a matrix whose
// Cholesky pivot fails is a NotSPD error, never a silent LU fallback.
struct LdFlags {
  bool spd = false;
  bool orth = false;
  bool gamma_half = true;          // gamma = 1/2, else 1
  // delta = 0: U_{X^perp} is given for free. Only meaningful together with
  // orth; a non-orthonormal X always pays for gs(X) and the complement.
  bool delta_precomputed = false;
};

struct LdResult {
  SignedLogDet value;
  OpCounter counter;
  std::uint64_t wall_ns = 0;
  Algorithm algorithm = Algorithm::LD1;
};

LdResult ld1(const DenseMatrix& a, const DenseMatrix& x, const LdFlags& flags);
LdResult ld2(const DenseMatrix& a, const DenseMatrix& x, const LdFlags& flags);

struct Ld3Options {
  // Orthonormal basis of X^perp. Never charged to the counter.
  std::optional<DenseMatrix> uperp;
  // Check shape and orthonormality of a supplied uperp (InvalidInput).
  bool verify_inputs = false;
  // Seed of complement_basis when uperp is not supplied.
  std::uint64_t seed = 0x5eed0003;
};

// With delta_precomputed, orth and no uperp, the complement basis is built
// uncounted, which models a basis computed ahead of time.
LdResult ld3(const DenseMatrix& a, const DenseMatrix& x, const LdFlags& flags,
             const Ld3Options& options = {});

LdResult run(Algorithm algorithm, const DenseMatrix& a, const DenseMatrix& x,
             const LdFlags& flags, const Ld3Options& options = {});

// Exact rational with int64 numerator/denominator; products and sums go
// through 128-bit intermediates and are reduced by the gcd.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  // Best approximation with denominator <= max_den (continued fractions).
  static Rational approximate(double x, std::int64_t max_den = 1 << 16);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Cost per n^3:
//   LD1 spd     1/3 + rho/2 + gamma rho^2 + rho^3/3
//   LD1 other   2/3 + rho + rho^2 + 2 rho^3/3
//   LD2 orth    2/3 + 2 rho
//   LD2 other   2/3 + 2 rho + (gamma + 1/2) rho^2 + rho^3/3
//   LD3         (1 - rho)
//             + spd ? gamma (1 - rho)^2 + (1 - rho)^3/3 : (1 - rho)^2 + 2 (1 - rho)^3/3
//             + orth ? 2 delta (1 - rho^2) : 2 + gamma rho^2 + rho^3/3
// delta enters only the orthonormal branch.
Rational complexity_model_exact(Algorithm algorithm, const Rational& rho, const LdFlags& flags);
double complexity_model(Algorithm algorithm, double rho, const LdFlags& flags);

// Root in [0, 1] of model(challenger) - model(LD1) found by bisection on
// the sign change; nullopt when the challenger never wins or always wins.
std::optional<double> model_crossover(Algorithm challenger, const LdFlags& flags);

// Benchmark matrices for one (n, seed): A, a Gaussian n x (n - 1) design
// and its Gram-Schmidt orthonormalization. Every p uses the leading p
// columns of the same design, so instances are nested across rho.
struct BenchInstance {
  DenseMatrix A;
  DenseMatrix x_raw;
  DenseMatrix x_orth;
};
BenchInstance make_bench_instance(std::size_t n, bool spd, std::uint64_t seed);
DenseMatrix design_columns(const BenchInstance& inst, std::size_t p, bool orth);
// p = round(rho n) clamped to [1, n - 1].
std::size_t columns_for(double rho, std::size_t n);

struct ScanRow {
  double rho = 0.0;
  std::size_t p = 0;
  double model[3] = {0, 0, 0};
  double measured[3] = {0, 0, 0};  // weighted MACs per n^3; 0 in model-only mode
};

struct CrossoverScan {
  std::vector<ScanRow> rows;
  // Smallest rho at which the challenger's cost drops below LD1, linearly
  // interpolated between the straddling grid points.
  std::optional<double> ld2_model, ld3_model, ld2_measured, ld3_measured;
};

// Generates A (SPD when flags.spd, random_general otherwise) and a
// Gaussian X from `seed`; the same matrices serve every rho.
CrossoverScan crossover_scan(std::size_t n, const LdFlags& flags,
                             const std::vector<double>& rho_grid, bool measured,
                             std::uint64_t seed = 1);

}  // namespace pdetkit::ld
