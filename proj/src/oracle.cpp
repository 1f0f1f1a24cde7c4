#include "pdetkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdetkit/kernels.hpp"

namespace pdetkit::oracle {

namespace {

constexpr std::uint64_t kCompletionSeed = 0x5eedba5e;

void check_size(std::size_t n) {
  if (n > kOracleMaxN) {
    throw Error(ErrorCode::TooLarge, "oracle limited to n <= " + std::to_string(kOracleMaxN));
  }
}

double off_diagonal_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomp jacobi_eigen(const DenseMatrix& input) {
  if (!input.is_square()) throw Error(ErrorCode::ShapeMismatch, "jacobi_eigen");
  check_size(input.rows());
  if (relative_asymmetry(input) > kSymTol) {
    throw Error(ErrorCode::NotSymmetric, "jacobi_eigen requires a symmetric matrix");
  }
  const std::size_t n = input.rows();
  DenseMatrix a = input;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = s;
      a(j, i) = s;
    }
  DenseMatrix v = DenseMatrix::identity(n);
  const double target = 1e-13 * frobenius_norm(a);

  for (int sweep = 0; sweep < 100 && off_diagonal_norm(a) > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenDecomp out;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

namespace {

// Hestenes one-sided Jacobi for rows >= cols.
SVDecomp svd_tall(const DenseMatrix& a) {
  const std::size_t n = a.rows(), m = a.cols();
  DenseMatrix w = a.transpose();  // row j = column j of A
  DenseMatrix vt = DenseMatrix::identity(m);  // row j = column j of V

  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        std::span<double> wi(w.row_ptr(i), n), wj(w.row_ptr(j), n);
        const double alpha = dot(wi, wi), beta = dot(wj, wj), gamma = dot(wi, wj);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(zeta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = wi[k], y = wj[k];
          wi[k] = c * x - s * y;
          wj[k] = s * x + c * y;
        }
        double* vi = vt.row_ptr(i);
        double* vj = vt.row_ptr(j);
        for (std::size_t k = 0; k < m; ++k) {
          const double x = vi[k], y = vj[k];
          vi[k] = c * x - s * y;
          vj[k] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::span<const double> wj(w.row_ptr(j), n);
    sigma[j] = std::sqrt(dot(wj, wj));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SVDecomp out;
  out.S.resize(m);
  out.U = DenseMatrix(n, m);
  out.V = DenseMatrix(m, m);
  const double smax = m > 0 ? sigma[order[0]] : 0.0;
  std::size_t good = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t j = order[k];
    out.S[k] = sigma[j];
    for (std::size_t i = 0; i < m; ++i) out.V(i, k) = vt(j, i);
    if (sigma[j] > 1e-13 * smax && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < n; ++i) out.U(i, k) = w(j, i) / sigma[j];
      good = k + 1;
    }
  }
  if (good < m) {
    // Left vectors for (numerically) zero singular values are arbitrary;
    // complete them to an orthonormal set.
    const DenseMatrix fill = complement_basis(out.U.leading_columns(good), kCompletionSeed);
    for (std::size_t k = good; k < m; ++k)
      for (std::size_t i = 0; i < n; ++i) out.U(i, k) = fill(i, k - good);
  }
  return out;
}

}  // namespace

SVDecomp jacobi_svd(const DenseMatrix& a) {
  check_size(std::max(a.rows(), a.cols()));
  if (a.rows() >= a.cols()) return svd_tall(a);
  SVDecomp t = svd_tall(a.transpose());
  return SVDecomp{std::move(t.V), std::move(t.S), std::move(t.U)};
}

namespace {

// Reduction to upper Hessenberg form by stabilized elementary similarity
// transformations, on a 1-indexed copy.
void hessenberg(std::vector<std::vector<double>>& a, std::size_t n) {
  for (std::size_t m = 2; m < n; ++m) {
    double x = 0.0;
    std::size_t i = m;
    for (std::size_t j = m; j <= n; ++j) {
      if (std::abs(a[j][m - 1]) > std::abs(x)) {
        x = a[j][m - 1];
        i = j;
      }
    }
    if (i != m) {
      for (std::size_t j = m - 1; j <= n; ++j) std::swap(a[i][j], a[m][j]);
      for (std::size_t j = 1; j <= n; ++j) std::swap(a[j][i], a[j][m]);
    }
    if (x != 0.0) {
      for (i = m + 1; i <= n; ++i) {
        double y = a[i][m - 1];
        if (y != 0.0) {
          y /= x;
          a[i][m - 1] = y;
          for (std::size_t j = m; j <= n; ++j) a[i][j] -= y * a[m][j];
          for (std::size_t j = 1; j <= n; ++j) a[j][m] += y * a[j][i];
        }
      }
    }
  }
  for (std::size_t i = 3; i <= n; ++i)
    for (std::size_t j = 1; j + 1 < i; ++j) a[i][j] = 0.0;
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (1-indexed).
std::vector<std::complex<double>> hessenberg_qr(std::vector<std::vector<double>>& a,
                                                std::size_t n) {
  constexpr double eps = 2.220446049250313e-16;
  std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);
  double anorm = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = std::max<std::size_t>(i - 1, 1); j <= n; ++j) anorm += std::abs(a[i][j]);

  long nn = static_cast<long>(n);
  double t = 0.0;
  double p = 0, q = 0, r = 0, s = 0, w = 0, x = 0, y = 0, z = 0;
  while (nn >= 1) {
    int its = 0;
    long l;
    do {
      for (l = nn; l >= 2; --l) {
        s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) <= eps * s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        y = a[nn - 1][nn - 1];
        w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (its == 60) throw Error(ErrorCode::InvalidInput, "QR iteration did not converge");
          if (its == 10 || its == 20 || its == 40) {
            t += x;
            for (long i = 1; i <= nn; ++i) a[i][i] -= x;
            s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          long m;
          for (m = nn - 2; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            const double v =
                std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
            if (u <= eps * v) break;
          }
          for (long i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (long k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = sign_of(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == m) {
                if (l != m) a[k][k - 1] = -a[k][k - 1];
              } else {
                a[k][k - 1] = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (long j = k; j <= nn; ++j) {
                p = a[k][j] + q * a[k + 1][j];
                if (k != nn - 1) {
                  p += r * a[k + 2][j];
                  a[k + 2][j] -= p * z;
                }
                a[k + 1][j] -= p * y;
                a[k][j] -= p * x;
              }
              const long mmin = nn < k + 3 ? nn : k + 3;
              for (long i = l; i <= mmin; ++i) {
                p = x * a[i][k] + y * a[i][k + 1];
                if (k != nn - 1) {
                  p += z * a[i][k + 2];
                  a[i][k + 2] -= p * r;
                }
                a[i][k + 1] -= p * q;
                a[i][k] -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t i = 1; i <= n; ++i) out[i - 1] = {wr[i], wi[i]};
  return out;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const DenseMatrix& a) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, "eigenvalues");
  check_size(a.rows());
  const std::size_t n = a.rows();
  std::vector<std::vector<double>> h(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h[i + 1][j + 1] = a(i, j);
  hessenberg(h, n);
  return hessenberg_qr(h, n);
}

DenseMatrix pinv_oracle(const DenseMatrix& a, double rtol) {
  const SVDecomp svd = jacobi_svd(a);
  DenseMatrix out(a.cols(), a.rows());
  const double cut = svd.S.empty() ? 0.0 : rtol * svd.S[0];
  for (std::size_t k = 0; k < svd.S.size(); ++k) {
    if (!(svd.S[k] > cut)) break;
    const double inv = 1.0 / svd.S[k];
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double vik = svd.V(i, k) * inv;
      for (std::size_t j = 0; j < a.rows(); ++j) out(i, j) += vik * svd.U(j, k);
    }
  }
  return out;
}

std::size_t rank_oracle(const DenseMatrix& a, double rtol) {
  if (a.empty()) return 0;
  const SVDecomp svd = jacobi_svd(a);
  const double cut = rtol * svd.S[0];
  return static_cast<std::size_t>(
      std::count_if(svd.S.begin(), svd.S.end(), [&](double s) { return s > cut; }));
}

DenseMatrix range_basis(const DenseMatrix& a, double rtol) {
  if (a.empty()) return DenseMatrix(a.rows(), 0);
  const SVDecomp svd = jacobi_svd(a);
  const double cut = rtol * svd.S[0];
  std::size_t r = 0;
  while (r < svd.S.size() && svd.S[r] > cut) ++r;
  return svd.U.leading_columns(r);
}

DenseMatrix null_space(const DenseMatrix& a, double rtol) {
  const std::size_t m = a.cols();
  const DenseMatrix row_space = range_basis(a.transpose(), rtol);
  if (row_space.cols() == 0) return DenseMatrix::identity(m);
  return complement_basis(row_space, kCompletionSeed);
}

SignedLogDet pdet_oracle(const DenseMatrix& a, double rtol) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, "pdet_oracle");
  check_size(a.rows());
  SignedLogDet out{1, 0.0};
  if (a.empty() || max_abs(a) == 0.0) return out;

  if (relative_asymmetry(a) <= kSymTol) {
    const auto values = jacobi_eigen(a).values;
    double lmax = 0.0;
    for (double l : values) lmax = std::max(lmax, std::abs(l));
    for (double l : values) {
      if (std::abs(l) > rtol * lmax) {
        out.logabs += std::log(std::abs(l));
        if (l < 0) out.sign = -out.sign;
      }
    }
    return out;
  }

  const auto values = eigenvalues(a);
  double lmax = 0.0;
  for (auto l : values) lmax = std::max(lmax, std::abs(l));
  for (auto l : values) {
    if (std::abs(l) > rtol * lmax) {
      out.logabs += std::log(std::abs(l));
      // Conjugate pairs contribute |lambda|^2 > 0; only real negatives flip.
      if (l.imag() == 0.0 && l.real() < 0) out.sign = -out.sign;
    }
  }
  return out;
}

}  // namespace pdetkit::oracle
