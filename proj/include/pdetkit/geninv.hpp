// The singular-Woodbury matrix
//
//     M = A^+ - A^+ X (Y^T A^+ X)^+ Y^T A^+,      F := Y^T A^+ X,
//
// together with its kernel/cokernel, the projectors Q1, Q2 and P, the
// nonsingular companion N = I - P + A P, the Bott-Duffin inverse, M^+,
// compressions, and pseudo-determinant identities for EP matrices A.
//
// These routines target correctness at small n (they lean on the SVD oracle
// for ranks and pseudo-inverses) and are not operation-counted, except for
// the factored assembly of N.

#pragma once

#include "pdetkit/matrix.hpp"
#include "pdetkit/oracle.hpp"

namespace pdetkit::geninv {

inline constexpr double kEpTol = 1e-8;

struct SingularWoodbury {
  DenseMatrix A;     // n x m
  DenseMatrix X;     // n x p
  DenseMatrix Y;     // m x q
  DenseMatrix Adag;  // m x n
  DenseMatrix F;     // q x p
  double rtol = oracle::kDefaultRtol;
};

// A^+ through an LU inverse when A is square and of full rank, through the
// truncated SVD otherwise.
DenseMatrix pseudo_inverse(const DenseMatrix& a, double rtol = oracle::kDefaultRtol);

SingularWoodbury build(const DenseMatrix& a, const DenseMatrix& x, const DenseMatrix& y,
                       double rtol = oracle::kDefaultRtol);

struct Conditions {
  bool cond_c = false;  // ker F = ker X, i.e. rank F = rank X
  bool cond_f = false;  // im F = im Y^T, i.e. rank F = rank Y
};
Conditions check_conditions(const SingularWoodbury& sw);

DenseMatrix m_matrix(const SingularWoodbury& sw);

struct QProjectors {
  DenseMatrix Q1;  // I - X F^+ Y^T A^+   (n x n)
  DenseMatrix Q2;  // I - A^+ X F^+ Y^T   (m x m)
};
QProjectors q_projectors(const SingularWoodbury& sw);

struct SubspacePair {
  DenseMatrix Xhat;  // orthonormal basis of ker M
  DenseMatrix Yhat;  // orthonormal basis of ker M^T
  bool structural = false;
  // Structural path only: the sums X + (...) and Y + (...) were direct.
  bool dims_consistent = true;
};

enum class KernelMethod { Auto, Structural, Svd };

// Structural: Xhat = X + ((A^+)^T Y)^perp ∩ ker A^T and
// Yhat = Y + (A^+ X)^perp ∩ ker A, valid under cond_c and cond_f.
// Svd: null spaces of M and M^T. Auto picks Structural when both
// conditions hold. Requesting Structural without them throws
// ConditionsFailed.
SubspacePair kernel_cokernel(const SingularWoodbury& sw, KernelMethod method = KernelMethod::Auto);

// P = I - Xhat (Yhat^T Xhat)^{-1} Yhat^T. Throws NotComplementary when
// Yhat^T Xhat is singular.
DenseMatrix p_oblique(const DenseMatrix& xhat, const DenseMatrix& yhat);

// N = I - P + A P, formed densely.
DenseMatrix n_matrix(const DenseMatrix& a, const DenseMatrix& p);

// N for P = I - X (Y^T X)^+ Y^T without forming A P:
//   C = A - I,  D = C X,  E = D G Y^T,  N = A - E,   G = (Y^T X)^+.
// O(n^2 p) MACs; G is skipped when Y = X is declared orthonormal.
DenseMatrix n_matrix_factored(const DenseMatrix& a, const DenseMatrix& x, const DenseMatrix& y,
                              OpCounter* counter = nullptr, bool x_orthonormal = false);

// M = P N^{-1}. Throws SingularN.
DenseMatrix m_from_projection(const DenseMatrix& a, const DenseMatrix& p);

// P_S (P_{S^perp} + A P_S)^{-1} for an orthonormal basis S of the subspace.
// Throws SingularRestriction.
DenseMatrix bott_duffin(const DenseMatrix& a, const DenseMatrix& s_basis);

// M^+ = P_{Xhat^perp} A P_{Yhat^perp}.
DenseMatrix m_pinv(const DenseMatrix& a, const DenseMatrix& xhat, const DenseMatrix& yhat);

// U^T B U.
DenseMatrix compress(const DenseMatrix& b, const DenseMatrix& u);

// Orthogonal projector onto im(B) and onto its complement.
DenseMatrix range_projector(const DenseMatrix& b, double rtol = oracle::kDefaultRtol);
DenseMatrix complement_projector(const DenseMatrix& b, double rtol = oracle::kDefaultRtol);

// ||A A^+ - A^+ A||_F < kEpTol (1 + ||A A^+||_F).
bool is_ep(const DenseMatrix& a, double rtol = oracle::kDefaultRtol);

// rank(B^2) == rank(B).
bool has_index_one(const DenseMatrix& b, double rtol = oracle::kDefaultRtol);

// pdet(B) = det(U^T B U), U an orthonormal basis of im(B). Throws
// IndexNotOne when rank(B^2) != rank(B).
SignedLogDet pdet_index_one(const DenseMatrix& b, double rtol = oracle::kDefaultRtol);

// pdet_index_one when B has index one, the eigenvalue oracle otherwise.
SignedLogDet pdet_general(const DenseMatrix& b, double rtol = oracle::kDefaultRtol);

enum class PdetVariant { Basis, Factored };

// Basis:    |U_{Xhat^perp}^T U_{Yhat^perp}| / |U_{Xhat^perp}^T A U_{Yhat^perp}|
// Factored: pdet(Yhat^T P_A Xhat) / (pdet(A) pdet(Yhat^T A^+ Xhat)),  P_A = A A^+
// Throws NotEP, IndexNotOne (Yhat^T Xhat singular), KernelOverlap
// (ker(P_A Xhat) meets coim(P_A Yhat)), ShapeMismatch.
SignedLogDet pdet_m(const DenseMatrix& a, const DenseMatrix& xhat, const DenseMatrix& yhat,
                    PdetVariant variant, double rtol = oracle::kDefaultRtol);

// The pair [U_{Xhat ∩ im A}, U_{A^perp}], [U_{Yhat ∩ im A}, U_{A^perp}],
// which always satisfies the kernel-overlap condition.
SubspacePair split_kernel_pair(const DenseMatrix& a, const DenseMatrix& xhat,
                               const DenseMatrix& yhat, double rtol = oracle::kDefaultRtol);

// ker(P_A Xhat) ∩ coim(P_A Yhat) == {0}.
bool kernel_overlap_free(const DenseMatrix& a, const DenseMatrix& xhat, const DenseMatrix& yhat,
                         double rtol = oracle::kDefaultRtol);

struct DetIdentityReport {
  SignedLogDet lhs;  // pdet(A) pdet(Y^T A^+ X)
  SignedLogDet rhs;  // pdet(Y^T A A^+ X) det(N)
  double residual = 0.0;  // |lhs.logabs - rhs.logabs|, +inf on sign mismatch
  bool direct_x_ay = false;       // X (+) A Y^perp = R^n
  bool direct_x_y = false;        // X (+) Y^perp = R^n
  bool null_a_in_xy = false;      // ker A^T ⊆ X ∩ Y
  bool kernel_overlap_ok = false; // ker(P_A X) ∩ coim(P_A Y) = {0}
  bool ep = false;
};
DetIdentityReport det_identity_check(const DenseMatrix& a, const DenseMatrix& x,
                                     const DenseMatrix& y, double rtol = oracle::kDefaultRtol);

}  // namespace pdetkit::geninv
