#include "pdetkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdetkit/random.hpp"

namespace pdetkit {

namespace {

using u64 = std::uint64_t;

void require_square(const DenseMatrix& a, const char* what) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": not square");
}

// Cholesky body. Returns nullopt on a failed pivot; the caller decides
// whether that is an error.
std::optional<CholFactor> factor_cholesky(const DenseMatrix& a, OpCounter* counter) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double threshold = kPivotTol * max_diag;

  DenseMatrix l(n, n);
  u64 macs = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = l.row_ptr(j);
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= lj[k] * lj[k];
    macs += j;
    if (!(s > threshold) || max_diag == 0.0) {
      charge(counter, OpKind::Cholesky, macs);
      return std::nullopt;
    }
    const double ljj = std::sqrt(s);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double* li = l.row_ptr(i);
      double t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= li[k] * lj[k];
      l(i, j) = t / ljj;
    }
    macs += (n - j - 1) * j;
  }
  charge(counter, OpKind::Cholesky, macs);
  return CholFactor{std::move(l)};
}

}  // namespace

CholFactor cholesky(const DenseMatrix& a, OpCounter* counter) {
  require_square(a, "cholesky");
  if (relative_asymmetry(a) > kSymTol) {
    throw Error(ErrorCode::NotSPD, "matrix is not symmetric");
  }
  auto f = factor_cholesky(a, counter);
  if (!f) throw Error(ErrorCode::NotSPD, "non-positive pivot in Cholesky factorization");
  return std::move(*f);
}

std::optional<CholFactor> try_cholesky(const DenseMatrix& a, OpCounter* counter) {
  require_square(a, "cholesky");
  if (relative_asymmetry(a) > kSymTol) return std::nullopt;
  return factor_cholesky(a, counter);
}

LUFactors lu_partial_pivot(const DenseMatrix& a, OpCounter* counter) {
  require_square(a, "lu");
  const std::size_t n = a.rows();
  DenseMatrix w = a;
  LUFactors f;
  f.perm.resize(n);
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  const double tol = kRankTol * max_abs(a);
  std::vector<bool> skipped(n, false);

  u64 macs = 0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    double best_abs = std::abs(w(f.perm[k], k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(w(f.perm[i], k));
      if (v > best_abs) {
        best_abs = v;
        best = i;
      }
    }
    if (best != k) {
      std::swap(f.perm[k], f.perm[best]);
      f.parity = -f.parity;
    }
    if (!(best_abs > tol)) {
      f.singular = true;
      skipped[k] = true;
      continue;
    }
    const double* pivot_row = w.row_ptr(f.perm[k]);
    const double pivot = pivot_row[k];
    for (std::size_t i = k + 1; i < n; ++i) {
      double* row = w.row_ptr(f.perm[i]);
      const double m = row[k] / pivot;
      row[k] = m;
      for (std::size_t j = k + 1; j < n; ++j) row[j] -= m * pivot_row[j];
    }
    macs += (n - k - 1) * (n - k - 1);
  }
  charge(counter, OpKind::Lu, macs);

  f.L = DenseMatrix(n, n);
  f.U = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = w.row_ptr(f.perm[i]);
    for (std::size_t j = 0; j < i; ++j) f.L(i, j) = skipped[j] ? 0.0 : row[j];
    f.L(i, i) = 1.0;
    for (std::size_t j = i; j < n; ++j) f.U(i, j) = row[j];
  }
  return f;
}

DenseMatrix permute_rows(const DenseMatrix& b, const std::vector<std::size_t>& perm) {
  if (perm.size() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "permute_rows");
  DenseMatrix out(b.rows(), b.cols());
  for (std::size_t i = 0; i < b.rows(); ++i)
    std::copy_n(b.row_ptr(perm[i]), b.cols(), out.row_ptr(i));
  return out;
}

DenseMatrix solve_triangular(const DenseMatrix& t, const DenseMatrix& b, Triangle side,
                             OpCounter* counter, bool unit_diagonal) {
  require_square(t, "solve_triangular");
  if (t.rows() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "solve_triangular");
  const std::size_t n = t.rows();
  const std::size_t p = b.cols();
  if (!unit_diagonal) {
    const double tol = kRankTol * max_abs(t);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(std::abs(t(i, i)) > tol)) {
        throw Error(ErrorCode::ZeroDiagonal, "triangular factor has a zero diagonal entry");
      }
    }
  }
  DenseMatrix z = b;
  auto eliminate = [&](std::size_t i, std::size_t k) {
    const double tik = t(i, k);
    double* zi = z.row_ptr(i);
    const double* zk = z.row_ptr(k);
    for (std::size_t c = 0; c < p; ++c) zi[c] -= tik * zk[c];
  };
  auto finish = [&](std::size_t i) {
    if (unit_diagonal) return;
    const double d = t(i, i);
    double* zi = z.row_ptr(i);
    for (std::size_t c = 0; c < p; ++c) zi[c] /= d;
  };
  if (side == Triangle::Lower) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) eliminate(i, k);
      finish(i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) eliminate(ii, k);
      finish(ii);
    }
  }
  charge(counter, OpKind::Trsm, static_cast<u64>(p) * n * (n > 0 ? n - 1 : 0) / 2);
  return z;
}

DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b, OpCounter* counter, Op op_a,
                 Op op_b) {
  const DenseMatrix& lhs = (op_a == Op::Transpose) ? a.transpose() : a;
  const DenseMatrix rhs = (op_b == Op::Transpose) ? b.transpose() : b;
  if (lhs.cols() != rhs.rows()) throw Error(ErrorCode::ShapeMismatch, "gemm");
  const std::size_t m = lhs.rows(), k = lhs.cols(), n = rhs.cols();
  DenseMatrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.row_ptr(i);
    const double* ai = lhs.row_ptr(i);
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = rhs.row_ptr(l);
      for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  }
  charge(counter, OpKind::Gemm, static_cast<u64>(m) * k * n);
  return c;
}

namespace {

// Z = U^T Y, upper triangle only in half mode (mirrored afterwards).
DenseMatrix transposed_product(const DenseMatrix& u, const DenseMatrix& y, GramMode mode,
                               OpCounter* counter) {
  if (u.rows() != y.rows() || u.cols() != y.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "gramian");
  }
  const std::size_t n = u.rows(), q = u.cols();
  const bool half = (mode == GramMode::Half);
  DenseMatrix z(q, q);
  for (std::size_t r = 0; r < n; ++r) {
    const double* ur = u.row_ptr(r);
    const double* yr = y.row_ptr(r);
    for (std::size_t i = 0; i < q; ++i) {
      const double ui = ur[i];
      double* zi = z.row_ptr(i);
      for (std::size_t j = half ? i : 0; j < q; ++j) zi[j] += ui * yr[j];
    }
  }
  if (half) {
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < i; ++j) z(i, j) = z(j, i);
  } else {
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        const double s = 0.5 * (z(i, j) + z(j, i));
        z(i, j) = s;
        z(j, i) = s;
      }
  }
  const u64 full = static_cast<u64>(n) * q * q;
  charge(counter, OpKind::Gramian, half ? (full + 1) / 2 : full);
  return z;
}

}  // namespace

DenseMatrix gramian(const DenseMatrix& x, OpCounter* counter, GramMode mode) {
  return transposed_product(x, x, mode, counter);
}

DenseMatrix symmetric_product(const DenseMatrix& u, const DenseMatrix& y, OpCounter* counter,
                              GramMode mode) {
  return transposed_product(u, y, mode, counter);
}

namespace {

// Projects v against rows [0, count) of q (each row an orthonormal vector),
// twice. Returns the MACs spent.
u64 project_out(const DenseMatrix& q, std::size_t count, std::span<double> v) {
  const std::size_t n = v.size();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < count; ++j) {
      std::span<const double> qj(q.row_ptr(j), n);
      const double r = dot(qj, v);
      for (std::size_t i = 0; i < n; ++i) v[i] -= r * qj[i];
    }
  }
  return 2 * 2 * static_cast<u64>(n) * count;
}

double normalize(std::span<double> v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return norm;
}

}  // namespace

DenseMatrix gram_schmidt(const DenseMatrix& x, OpCounter* counter) {
  const std::size_t n = x.rows(), p = x.cols();
  DenseMatrix q = x.transpose();  // row j holds column j
  const double tol = kRankTol * max_abs(x);
  u64 macs = 0;
  for (std::size_t k = 0; k < p; ++k) {
    std::span<double> v(q.row_ptr(k), n);
    macs += project_out(q, k, v);
    macs += n;
    const double norm = normalize(v);
    if (!(norm > tol)) {
      charge(counter, OpKind::GramSchmidt, macs);
      throw Error(ErrorCode::RankDeficient, "column " + std::to_string(k) +
                                                " is linearly dependent on earlier columns");
    }
  }
  charge(counter, OpKind::GramSchmidt, macs);
  return q.transpose();
}

DenseMatrix complement_basis(const DenseMatrix& xorth, std::uint64_t seed, OpCounter* counter,
                             int max_retries) {
  const std::size_t n = xorth.rows(), p = xorth.cols();
  if (p > n) throw Error(ErrorCode::ShapeMismatch, "complement_basis: more columns than rows");
  const std::size_t k = n - p;
  DenseMatrix q(n, n);  // rows: xorth columns, then the new basis vectors
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) q(j, i) = xorth(i, j);

  u64 macs = 0;
  const u64 attempts = static_cast<u64>(max_retries) + 1;
  for (std::size_t j = 0; j < k; ++j) {
    std::span<double> v(q.row_ptr(p + j), n);
    bool accepted = false;
    for (u64 attempt = 0; attempt < attempts && !accepted; ++attempt) {
      Rng rng = Rng::stream(seed, j * attempts + attempt);
      for (double& x : v) x = rng.normal();
      const double start = std::sqrt(dot(v, v));
      macs += project_out(q, p + j, v);
      macs += n;
      const double norm = normalize(v);
      accepted = norm > 1e-6 * start;
    }
    if (!accepted) {
      charge(counter, OpKind::GramSchmidt, macs);
      throw Error(ErrorCode::RankDeficient, "complement_basis: random columns kept collapsing");
    }
  }
  charge(counter, OpKind::GramSchmidt, macs);
  return q.block(p, 0, k, n).transpose();
}

SignedLogDet logdet_triangular(const CholFactor& factor) {
  double s = 0.0;
  for (std::size_t i = 0; i < factor.n(); ++i) s += std::log(factor.L(i, i));
  return {1, s};
}

SignedLogDet logdet_triangular(const LUFactors& factor) {
  if (factor.singular) return SignedLogDet::zero();
  const std::size_t n = factor.n();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(factor.U(i, i)));
  int sign = factor.parity;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = factor.U(i, i);
    if (!(std::abs(d) > kRankTol * max_diag)) return SignedLogDet::zero();
    if (d < 0) sign = -sign;
    s += std::log(std::abs(d));
  }
  return {sign, s};
}

SignedLogDet logdet_lu(const DenseMatrix& a, OpCounter* counter) {
  return logdet_triangular(lu_partial_pivot(a, counter));
}

DenseMatrix inverse(const DenseMatrix& a) {
  const LUFactors f = lu_partial_pivot(a);
  if (f.singular || logdet_triangular(f).is_zero()) {
    throw Error(ErrorCode::SingularToTolerance, "matrix is singular to working tolerance");
  }
  const DenseMatrix pb = permute_rows(DenseMatrix::identity(a.rows()), f.perm);
  const DenseMatrix z = solve_triangular(f.L, pb, Triangle::Lower, nullptr, true);
  return solve_triangular(f.U, z, Triangle::Upper);
}

}  // namespace pdetkit
