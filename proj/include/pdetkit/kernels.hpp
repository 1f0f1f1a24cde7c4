// From-scratch dense kernels with deterministic MAC counting. Every kernel
// takes an optional counter; passing nullptr runs it uncounted.
//
// MAC conventions (one multiply plus one add in an inner loop):
//   cholesky          sum_j j (n - j)           ~ n^3 / 6
//   lu_partial_pivot  sum_k (n - k - 1)^2       ~ n^3 / 3
//   solve_triangular  p n (n - 1) / 2           ~ n^2 p / 2
//   gemm              m k n
//   gramian           gamma n p^2, gamma = 1/2 (half) or 1 (full)
//   gram_schmidt      2 passes x 2n per projection, plus n per norm

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pdetkit/matrix.hpp"

namespace pdetkit {

struct CholFactor {
  DenseMatrix L;  // lower triangular, positive diagonal
  std::size_t n() const noexcept { return L.rows(); }
};

struct LUFactors {
  DenseMatrix L;                  // unit lower triangular
  DenseMatrix U;                  // upper triangular
  std::vector<std::size_t> perm;  // row i of P A is row perm[i] of A
  int parity = 1;
  // A pivot fell below kRankTol * max|A|. The factors are still returned;
  // logdet_triangular reports sign 0.
  bool singular = false;
  std::size_t n() const noexcept { return U.rows(); }
};

enum class Triangle { Lower, Upper };
enum class Op { None, Transpose };
enum class GramMode { Half, Full };

inline double gamma_of(GramMode mode) noexcept { return mode == GramMode::Half ? 0.5 : 1.0; }

// Throws NotSPD when A is asymmetric beyond kSymTol or a pivot drops to
// kPivotTol * max|A_ii| or below.
CholFactor cholesky(const DenseMatrix& a, OpCounter* counter = nullptr);
std::optional<CholFactor> try_cholesky(const DenseMatrix& a, OpCounter* counter = nullptr);

LUFactors lu_partial_pivot(const DenseMatrix& a, OpCounter* counter = nullptr);

// Returns P B for the permutation stored in `perm` (O(n p) copy, no MACs).
DenseMatrix permute_rows(const DenseMatrix& b, const std::vector<std::size_t>& perm);

// Solves T Z = B. With unit_diagonal the diagonal of T is taken as 1 and
// never read.
DenseMatrix solve_triangular(const DenseMatrix& t, const DenseMatrix& b, Triangle side,
                             OpCounter* counter = nullptr, bool unit_diagonal = false);

// op(A) op(B), charged m k n MACs to the gemm category.
DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b, OpCounter* counter = nullptr,
                 Op op_a = Op::None, Op op_b = Op::None);

// X^T X, exactly symmetric. Charged gamma n p^2 to the gramian category.
DenseMatrix gramian(const DenseMatrix& x, OpCounter* counter = nullptr,
                    GramMode mode = GramMode::Half);

// U^T Y for a product known to be symmetric (U^T A U with A symmetric).
// Half mode forms the upper triangle and mirrors it. Charged gamma n q^2.
DenseMatrix symmetric_product(const DenseMatrix& u, const DenseMatrix& y,
                              OpCounter* counter = nullptr, GramMode mode = GramMode::Half);

// Modified Gram-Schmidt with one re-orthogonalization pass. Throws
// RankDeficient when a projected column norm is below kRankTol * max|X|.
DenseMatrix gram_schmidt(const DenseMatrix& x, OpCounter* counter = nullptr);

// Orthonormal basis of the orthogonal complement of im(xorth): seeded
// Gaussian columns orthonormalized against xorth and each other. A column
// that collapses is redrawn up to max_retries times before RankDeficient.
DenseMatrix complement_basis(const DenseMatrix& xorth, std::uint64_t seed,
                             OpCounter* counter = nullptr, int max_retries = 8);

// log det of a triangular factor. For Cholesky this is logdet(L), i.e.
// half of logdet(A). For LU the sign combines the permutation parity with
// the negative diagonals of U.
SignedLogDet logdet_triangular(const CholFactor& factor);
SignedLogDet logdet_triangular(const LUFactors& factor);

// Signed log|det| of a general square matrix through LU.
SignedLogDet logdet_lu(const DenseMatrix& a, OpCounter* counter = nullptr);

// A^{-1} through LU; throws SingularToTolerance.
DenseMatrix inverse(const DenseMatrix& a);

}  // namespace pdetkit
