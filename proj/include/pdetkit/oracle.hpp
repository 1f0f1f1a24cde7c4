// Slow, independent reference computations: Jacobi eigen/SVD, pseudo-inverse,
// pseudo-determinant and numerical rank. Intended for n up to a few hundred.

#pragma once

#include <complex>
#include <vector>

#include "pdetkit/matrix.hpp"

namespace pdetkit::oracle {

inline constexpr std::size_t kOracleMaxN = 256;
inline constexpr double kDefaultRtol = 1e-10;

struct EigenDecomp {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // column i pairs with values[i]
};

struct SVDecomp {
  DenseMatrix U;          // rows x k, orthonormal columns
  std::vector<double> S;  // k = min(rows, cols), non-negative, descending
  DenseMatrix V;          // cols x k, orthonormal columns
};

// Cyclic Jacobi. Throws NotSymmetric / TooLarge.
EigenDecomp jacobi_eigen(const DenseMatrix& a);

// One-sided (Hestenes) Jacobi on the tall orientation of A.
SVDecomp jacobi_svd(const DenseMatrix& a);

// Eigenvalues of a general square matrix: Hessenberg reduction followed by
// Francis double-shift QR.
std::vector<std::complex<double>> eigenvalues(const DenseMatrix& a);

DenseMatrix pinv_oracle(const DenseMatrix& a, double rtol = kDefaultRtol);

// Product of the eigenvalues with |lambda| > rtol * max|lambda|; the empty
// product (nilpotent or zero matrix) is (+1, 0). Symmetric inputs go
// through jacobi_eigen, everything else through eigenvalues().
SignedLogDet pdet_oracle(const DenseMatrix& a, double rtol = kDefaultRtol);

std::size_t rank_oracle(const DenseMatrix& a, double rtol = kDefaultRtol);

// Orthonormal bases from the SVD: im(A) and ker(A).
DenseMatrix range_basis(const DenseMatrix& a, double rtol = kDefaultRtol);
DenseMatrix null_space(const DenseMatrix& a, double rtol = kDefaultRtol);

}  // namespace pdetkit::oracle
