#include "pdetkit/geninv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdetkit/kernels.hpp"

namespace pdetkit::geninv {

using oracle::jacobi_svd;
using oracle::null_space;
using oracle::range_basis;
using oracle::rank_oracle;

namespace {

// Rank with an absolute cut rtol * scale, so that a product which is zero up
// to rounding is reported as rank 0 rather than rescaled to full rank.
std::size_t rank_abs(const DenseMatrix& b, double scale, double rtol) {
  if (b.empty()) return 0;
  const auto svd = jacobi_svd(b);
  const double cut = rtol * std::max(scale, svd.S[0] * 1.0);
  return static_cast<std::size_t>(
      std::count_if(svd.S.begin(), svd.S.end(), [&](double s) { return s > cut; }));
}

// Pseudo-inverse of a small product whose natural magnitude is `scale`.
DenseMatrix pinv_abs(const DenseMatrix& b, double scale, double rtol) {
  if (b.empty() || frobenius_norm(b) <= rtol * scale) return DenseMatrix(b.cols(), b.rows());
  return oracle::pinv_oracle(b, rtol);
}

double f_scale(const SingularWoodbury& sw) {
  return frobenius_norm(sw.Y) * frobenius_norm(sw.Adag) * frobenius_norm(sw.X);
}

DenseMatrix f_pinv(const SingularWoodbury& sw) { return pinv_abs(sw.F, f_scale(sw), sw.rtol); }

DenseMatrix normalized(const DenseMatrix& b) {
  const double s = frobenius_norm(b);
  return s > 0.0 ? (1.0 / s) * b : b;
}

double average_column_norm(const DenseMatrix& b) {
  if (b.cols() == 0) return 0.0;
  return frobenius_norm(b) / std::sqrt(static_cast<double>(b.cols()));
}

void require_square(const DenseMatrix& a, const char* what) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " needs square A");
}

}  // namespace

DenseMatrix pseudo_inverse(const DenseMatrix& a, double rtol) {
  if (a.is_square()) {
    if (a.rows() > oracle::kOracleMaxN) return inverse(a);
    if (a.rows() > 0 && rank_oracle(a, rtol) == a.rows()) return inverse(a);
  }
  return oracle::pinv_oracle(a, rtol);
}

SingularWoodbury build(const DenseMatrix& a, const DenseMatrix& x, const DenseMatrix& y,
                       double rtol) {
  if (x.rows() != a.rows() || y.rows() != a.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "build expects A n x m, X n x p, Y m x q");
  }
  SingularWoodbury sw;
  sw.A = a;
  sw.X = x;
  sw.Y = y;
  sw.rtol = rtol;
  sw.Adag = pseudo_inverse(a, rtol);
  sw.F = matmul(matmul(y.transpose(), sw.Adag), x);
  return sw;
}

Conditions check_conditions(const SingularWoodbury& sw) {
  const std::size_t rf = rank_abs(sw.F, f_scale(sw), sw.rtol);
  return Conditions{rf == rank_oracle(sw.X, sw.rtol), rf == rank_oracle(sw.Y, sw.rtol)};
}

DenseMatrix m_matrix(const SingularWoodbury& sw) {
  const DenseMatrix fd = f_pinv(sw);
  const DenseMatrix left = matmul(sw.Adag, sw.X);                 // m x p
  const DenseMatrix right = matmul(sw.Y.transpose(), sw.Adag);    // q x n
  return sw.Adag - matmul(matmul(left, fd), right);
}

QProjectors q_projectors(const SingularWoodbury& sw) {
  const DenseMatrix fd = f_pinv(sw);
  const DenseMatrix xf = matmul(sw.X, fd);
  QProjectors q;
  q.Q1 = DenseMatrix::identity(sw.A.rows()) -
         matmul(matmul(xf, sw.Y.transpose()), sw.Adag);
  q.Q2 = DenseMatrix::identity(sw.A.cols()) -
         matmul(matmul(matmul(sw.Adag, sw.X), fd), sw.Y.transpose());
  return q;
}

SubspacePair kernel_cokernel(const SingularWoodbury& sw, KernelMethod method) {
  bool structural = method == KernelMethod::Structural;
  if (method != KernelMethod::Svd) {
    const Conditions c = check_conditions(sw);
    const bool ok = c.cond_c && c.cond_f;
    if (method == KernelMethod::Structural && !ok) {
      throw Error(ErrorCode::ConditionsFailed, "structural kernel requires conditions (c) and (f)");
    }
    structural = ok;
  }

  SubspacePair out;
  out.structural = structural;
  if (!structural) {
    const DenseMatrix m = m_matrix(sw);
    out.Xhat = null_space(m, sw.rtol);
    out.Yhat = null_space(m.transpose(), sw.rtol);
    return out;
  }

  // ((A^+)^T Y)^perp ∩ ker A^T  =  ker [A^T; Y^T A^+]
  const DenseMatrix vx = null_space(
      vstack(normalized(sw.A.transpose()), normalized(matmul(sw.Y.transpose(), sw.Adag))),
      sw.rtol);
  // (A^+ X)^perp ∩ ker A  =  ker [A; X^T (A^+)^T]
  const DenseMatrix vy = null_space(
      vstack(normalized(sw.A), normalized(matmul(sw.Adag, sw.X).transpose())), sw.rtol);

  const DenseMatrix sx = hstack(sw.X, vx);
  const DenseMatrix sy = hstack(sw.Y, vy);
  out.Xhat = range_basis(sx, sw.rtol);
  out.Yhat = range_basis(sy, sw.rtol);
  out.dims_consistent = out.Xhat.cols() == rank_oracle(sw.X, sw.rtol) + vx.cols() &&
                        out.Yhat.cols() == rank_oracle(sw.Y, sw.rtol) + vy.cols();
  return out;
}

DenseMatrix p_oblique(const DenseMatrix& xhat, const DenseMatrix& yhat) {
  if (xhat.rows() != yhat.rows() || xhat.cols() != yhat.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "p_oblique expects equal shapes");
  }
  const std::size_t n = xhat.rows(), k = xhat.cols();
  if (k == 0) return DenseMatrix::identity(n);
  const DenseMatrix g = matmul(yhat.transpose(), xhat);
  const double scale = average_column_norm(xhat) * average_column_norm(yhat);
  if (rank_abs(g, scale, oracle::kDefaultRtol) < k) {
    throw Error(ErrorCode::NotComplementary, "Yhat^T Xhat is singular");
  }
  return DenseMatrix::identity(n) - matmul(matmul(xhat, inverse(g)), yhat.transpose());
}

DenseMatrix n_matrix(const DenseMatrix& a, const DenseMatrix& p) {
  require_square(a, "n_matrix");
  if (p.rows() != a.rows() || !p.is_square()) throw Error(ErrorCode::ShapeMismatch, "n_matrix");
  return DenseMatrix::identity(a.rows()) - p + matmul(a, p);
}

DenseMatrix n_matrix_factored(const DenseMatrix& a, const DenseMatrix& x, const DenseMatrix& y,
                              OpCounter* counter, bool x_orthonormal) {
  require_square(a, "n_matrix_factored");
  if (x.rows() != a.rows() || y.rows() != a.rows() || x.cols() != y.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "n_matrix_factored");
  }
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.rows(); ++i) c(i, i) -= 1.0;
  DenseMatrix d = gemm(c, x, counter);
  if (!x_orthonormal) {
    const DenseMatrix yx = gemm(y, x, counter, Op::Transpose);
    d = gemm(d, pinv_abs(yx, average_column_norm(x) * average_column_norm(y),
                         oracle::kDefaultRtol),
             counter);
  }
  const DenseMatrix e = gemm(d, x_orthonormal ? x : y, counter, Op::None, Op::Transpose);
  return a - e;
}

DenseMatrix m_from_projection(const DenseMatrix& a, const DenseMatrix& p) {
  const DenseMatrix n = n_matrix(a, p);
  try {
    return matmul(p, inverse(n));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularToTolerance) {
      throw Error(ErrorCode::SingularN, "N = I - P + A P is singular");
    }
    throw;
  }
}

DenseMatrix bott_duffin(const DenseMatrix& a, const DenseMatrix& s_basis) {
  require_square(a, "bott_duffin");
  if (s_basis.rows() != a.rows()) throw Error(ErrorCode::ShapeMismatch, "bott_duffin");
  const DenseMatrix ps = matmul(s_basis, s_basis.transpose());
  const DenseMatrix b = DenseMatrix::identity(a.rows()) - ps + matmul(a, ps);
  try {
    return matmul(ps, inverse(b));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularToTolerance) {
      throw Error(ErrorCode::SingularRestriction, "P_{S^perp} + A P_S is singular");
    }
    throw;
  }
}

DenseMatrix range_projector(const DenseMatrix& b, double rtol) {
  const DenseMatrix u = range_basis(b, rtol);
  return matmul(u, u.transpose());
}

DenseMatrix complement_projector(const DenseMatrix& b, double rtol) {
  return DenseMatrix::identity(b.rows()) - range_projector(b, rtol);
}

DenseMatrix m_pinv(const DenseMatrix& a, const DenseMatrix& xhat, const DenseMatrix& yhat) {
  if (xhat.rows() != a.rows() || yhat.rows() != a.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "m_pinv");
  }
  return matmul(matmul(complement_projector(xhat), a), complement_projector(yhat));
}

DenseMatrix compress(const DenseMatrix& b, const DenseMatrix& u) {
  if (!b.is_square() || u.rows() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "compress");
  return matmul(matmul(u.transpose(), b), u);
}

bool is_ep(const DenseMatrix& a, double rtol) {
  if (!a.is_square()) return false;
  const DenseMatrix ad = pseudo_inverse(a, rtol);
  const DenseMatrix left = matmul(a, ad);
  return frobenius_norm(left - matmul(ad, a)) < kEpTol * (1.0 + frobenius_norm(left));
}

bool has_index_one(const DenseMatrix& b, double rtol) {
  return rank_oracle(b, rtol) == rank_oracle(matmul(b, b), rtol);
}

SignedLogDet pdet_index_one(const DenseMatrix& b, double rtol) {
  if (!b.is_square()) throw Error(ErrorCode::ShapeMismatch, "pdet_index_one");
  const DenseMatrix u = range_basis(b, rtol);
  if (u.cols() == 0) return SignedLogDet{1, 0.0};
  // B maps im(B) into itself; B has index one exactly when that
  // restriction, U^T B U, is nonsingular.
  const SignedLogDet d = logdet_lu(compress(b, u));
  if (d.is_zero()) throw Error(ErrorCode::IndexNotOne, "matrix does not have index one");
  return d;
}

SignedLogDet pdet_general(const DenseMatrix& b, double rtol) {
  try {
    return pdet_index_one(b, rtol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IndexNotOne) throw;
  }
  return oracle::pdet_oracle(b, rtol);
}

bool kernel_overlap_free(const DenseMatrix& a, const DenseMatrix& xhat, const DenseMatrix& yhat,
                         double rtol) {
  const DenseMatrix pa = range_projector(a, rtol);
  const DenseMatrix bx = matmul(pa, xhat);
  const DenseMatrix by = matmul(pa, yhat);
  const DenseMatrix nx = null_space(bx, rtol);                // ker(P_A Xhat)
  const DenseMatrix vy = range_basis(by.transpose(), rtol);   // coim(P_A Yhat)
  if (nx.cols() == 0 || vy.cols() == 0) return true;
  return rank_oracle(hstack(nx, vy), rtol) == nx.cols() + vy.cols();
}

SubspacePair split_kernel_pair(const DenseMatrix& a, const DenseMatrix& xhat,
                               const DenseMatrix& yhat, double rtol) {
  require_square(a, "split_kernel_pair");
  const DenseMatrix pa = range_projector(a, rtol);
  const DenseMatrix ua_perp = null_space(a.transpose(), rtol);
  SubspacePair out;
  out.Xhat = hstack(range_basis(matmul(pa, xhat), rtol), ua_perp);
  out.Yhat = hstack(range_basis(matmul(pa, yhat), rtol), ua_perp);
  return out;
}

SignedLogDet pdet_m(const DenseMatrix& a, const DenseMatrix& xhat, const DenseMatrix& yhat,
                    PdetVariant variant, double rtol) {
  require_square(a, "pdet_m");
  if (xhat.rows() != a.rows() || yhat.rows() != a.rows() || xhat.cols() != yhat.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "pdet_m expects Xhat, Yhat n x k");
  }
  if (!is_ep(a, rtol)) throw Error(ErrorCode::NotEP, "A is not EP");
  const std::size_t k = xhat.cols();
  if (k > 0) {
    const double scale = average_column_norm(xhat) * average_column_norm(yhat);
    if (rank_abs(matmul(yhat.transpose(), xhat), scale, rtol) < k) {
      throw Error(ErrorCode::IndexNotOne, "Yhat^T Xhat is singular, so ind(M) != 1");
    }
  }

  if (variant == PdetVariant::Basis) {
    const DenseMatrix ux = null_space(xhat.transpose(), rtol);
    const DenseMatrix uy = null_space(yhat.transpose(), rtol);
    if (ux.cols() != uy.cols()) throw Error(ErrorCode::ShapeMismatch, "dim Xhat != dim Yhat");
    if (ux.cols() == 0) return SignedLogDet{1, 0.0};
    const DenseMatrix uxt = ux.transpose();
    return logdet_lu(matmul(uxt, uy)) - logdet_lu(matmul(matmul(uxt, a), uy));
  }

  if (!kernel_overlap_free(a, xhat, yhat, rtol)) {
    throw Error(ErrorCode::KernelOverlap, "ker(P_A Xhat) meets coim(P_A Yhat)");
  }
  const DenseMatrix adag = pseudo_inverse(a, rtol);
  const DenseMatrix pa = matmul(a, adag);
  const DenseMatrix yt = yhat.transpose();
  const SignedLogDet num = pdet_general(matmul(matmul(yt, pa), xhat), rtol);
  const SignedLogDet den =
      pdet_index_one(a, rtol) + pdet_general(matmul(matmul(yt, adag), xhat), rtol);
  return num - den;
}

DetIdentityReport det_identity_check(const DenseMatrix& a, const DenseMatrix& x,
                                     const DenseMatrix& y, double rtol) {
  require_square(a, "det_identity_check");
  const std::size_t n = a.rows();
  if (x.rows() != n || y.rows() != n || x.cols() != y.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "det_identity_check expects X, Y n x p");
  }
  DetIdentityReport r;
  r.ep = is_ep(a, rtol);

  const std::size_t rx = rank_oracle(x, rtol), ry = rank_oracle(y, rtol);
  const DenseMatrix uy_perp = null_space(y.transpose(), rtol);
  const DenseMatrix a_uy = matmul(a, uy_perp);
  const std::size_t r_auy = rank_oracle(a_uy, rtol);
  r.direct_x_ay = rx + r_auy == n && rank_oracle(hstack(x, a_uy), rtol) == n;
  r.direct_x_y = rx + (n - ry) == n && rank_oracle(hstack(x, uy_perp), rtol) == n;
  const DenseMatrix ua_perp = null_space(a.transpose(), rtol);
  r.null_a_in_xy = rank_oracle(hstack(x, ua_perp), rtol) == rx &&
                   rank_oracle(hstack(y, ua_perp), rtol) == ry;
  r.kernel_overlap_ok = kernel_overlap_free(a, x, y, rtol);

  const DenseMatrix adag = pseudo_inverse(a, rtol);
  const DenseMatrix yt = y.transpose();
  r.lhs = pdet_general(a, rtol) + pdet_general(matmul(matmul(yt, adag), x), rtol);

  const DenseMatrix g = matmul(yt, x);
  const DenseMatrix p =
      DenseMatrix::identity(n) -
      matmul(matmul(x, pinv_abs(g, average_column_norm(x) * average_column_norm(y), rtol)), yt);
  r.rhs = pdet_general(matmul(matmul(yt, matmul(a, adag)), x), rtol) + logdet_lu(n_matrix(a, p));

  r.residual = (r.lhs.sign == r.rhs.sign && !r.lhs.is_zero())
                   ? std::abs(r.lhs.logabs - r.rhs.logabs)
                   : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace pdetkit::geninv
