#include "pdetkit/logdet.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <type_traits>

#include "pdetkit/kernels.hpp"
#include "pdetkit/random.hpp"

namespace pdetkit::ld {

const char* to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::LD1: return "LD1";
    case Algorithm::LD2: return "LD2";
    case Algorithm::LD3: return "LD3";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "ld1") return Algorithm::LD1;
  if (lower == "ld2") return Algorithm::LD2;
  if (lower == "ld3") return Algorithm::LD3;
  return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

GramMode gram_mode(const LdFlags& f) { return f.gamma_half ? GramMode::Half : GramMode::Full; }

void check_inputs(const DenseMatrix& a, const DenseMatrix& x) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, "A must be square");
  if (x.rows() != a.rows()) throw Error(ErrorCode::ShapeMismatch, "X must have n rows");
  if (x.cols() > a.rows()) throw Error(ErrorCode::ShapeMismatch, "X must have p <= n columns");
}

// 2 logdet(L) of a Cholesky factor, i.e. logdet of the factored matrix.
SignedLogDet chol_logdet(const CholFactor& f) { return logdet_triangular(f).scaled(2); }

// logdet of an SPD matrix, or sign 0 when Cholesky breaks down.
SignedLogDet spd_logdet_or_zero(const DenseMatrix& w, OpCounter* counter) {
  auto f = try_cholesky(w, counter);
  return f ? chol_logdet(*f) : SignedLogDet::zero();
}

template <class Body>
LdResult timed(Algorithm algorithm, Body&& body) {
  LdResult r;
  r.algorithm = algorithm;
  const auto t0 = Clock::now();
  r.value = body(&r.counter);
  const auto t1 = Clock::now();
  r.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  return r;
}

}  // namespace

LdResult ld1(const DenseMatrix& a, const DenseMatrix& x, const LdFlags& flags) {
  check_inputs(a, x);
  return timed(Algorithm::LD1, [&](OpCounter* c) {
    if (flags.spd) {
      const CholFactor la = cholesky(a, c);
      const DenseMatrix y = solve_triangular(la.L, x, Triangle::Lower, c);
      const DenseMatrix w = gramian(y, c, gram_mode(flags));
      return chol_logdet(la) + spd_logdet_or_zero(w, c);
    }
    const LUFactors fa = lu_partial_pivot(a, c);
    if (fa.singular) return SignedLogDet::zero();
    const DenseMatrix z = solve_triangular(fa.L, permute_rows(x, fa.perm), Triangle::Lower, c,
                                           /*unit_diagonal=*/true);
    const DenseMatrix y = solve_triangular(fa.U, z, Triangle::Upper, c);
    const DenseMatrix w = gemm(x, y, c, Op::Transpose);
    return logdet_triangular(fa) + logdet_triangular(lu_partial_pivot(w, c));
  });
}

LdResult ld2(const DenseMatrix& a, const DenseMatrix& x, const LdFlags& flags) {
  check_inputs(a, x);
  return timed(Algorithm::LD2, [&](OpCounter* c) {
    DenseMatrix cm = a;
    for (std::size_t i = 0; i < cm.rows(); ++i) cm(i, i) -= 1.0;

    SignedLogDet gram{1, 0.0};
    DenseMatrix e;
    if (flags.orth) {
      const DenseMatrix d = gemm(cm, x, c);
      e = gemm(d, x, c, Op::None, Op::Transpose);
    } else {
      const DenseMatrix v = gramian(x, c, gram_mode(flags));
      auto lv = try_cholesky(v, c);
      if (!lv) return SignedLogDet::zero();
      gram = chol_logdet(*lv);
      // Y^T = L_V^{-1} X^T, so Y Y^T = X (X^T X)^{-1} X^T.
      const DenseMatrix y = solve_triangular(lv->L, x.transpose(), Triangle::Lower, c).transpose();
      const DenseMatrix d = gemm(cm, y, c);
      e = gemm(d, y, c, Op::None, Op::Transpose);
    }
    const DenseMatrix n = a - e;
    return gram + logdet_triangular(lu_partial_pivot(n, c));
  });
}

LdResult ld3(const DenseMatrix& a, const DenseMatrix& x, const LdFlags& flags,
             const Ld3Options& options) {
  check_inputs(a, x);
  const std::size_t n = a.rows(), p = x.cols();
  if (options.uperp && options.verify_inputs) {
    const DenseMatrix& u = *options.uperp;
    if (u.rows() != n || u.cols() != n - p) {
      throw Error(ErrorCode::InvalidInput, "uperp must be n x (n - p)");
    }
    const DenseMatrix utu = matmul(u.transpose(), u) - DenseMatrix::identity(n - p);
    const DenseMatrix utx = matmul(u.transpose(), x);
    const double xs = std::max(1.0, max_abs(x));
    if (max_abs(utu) > kOrthTol || max_abs(utx) > kOrthTol * xs) {
      throw Error(ErrorCode::InvalidInput, "uperp is not an orthonormal basis of X^perp");
    }
  }

  return timed(Algorithm::LD3, [&](OpCounter* c) {
    SignedLogDet gram{1, 0.0};
    DenseMatrix xo;
    if (!flags.orth) {
      try {
        xo = gram_schmidt(x, c);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::RankDeficient) {
          throw Error(ErrorCode::RankDeficientX, "X is rank deficient");
        }
        throw;
      }
    }
    const DenseMatrix& xbasis = flags.orth ? x : xo;

    DenseMatrix u;
    if (options.uperp) {
      u = *options.uperp;
    } else {
      const bool free_basis = flags.delta_precomputed && flags.orth;
      u = complement_basis(xbasis, options.seed, free_basis ? nullptr : c);
    }

    const DenseMatrix y = gemm(a, u, c);
    SignedLogDet z;
    if (flags.spd) {
      z = chol_logdet(cholesky(symmetric_product(u, y, c, gram_mode(flags)), c));
    } else {
      z = logdet_triangular(lu_partial_pivot(gemm(u, y, c, Op::Transpose), c));
    }
    if (!flags.orth) {
      const DenseMatrix v = gramian(x, c, gram_mode(flags));
      gram = spd_logdet_or_zero(v, c);
    }
    return gram + z;
  });
}

LdResult run(Algorithm algorithm, const DenseMatrix& a, const DenseMatrix& x,
             const LdFlags& flags, const Ld3Options& options) {
  switch (algorithm) {
    case Algorithm::LD1: return ld1(a, x, flags);
    case Algorithm::LD2: return ld2(a, x, flags);
    case Algorithm::LD3: return ld3(a, x, flags, options);
  }
  throw Error(ErrorCode::BadParams, "unknown algorithm");
}

// ---------------------------------------------------------------------------
// Rational arithmetic

namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational make_reduced(i128 num, i128 den) {
  if (den == 0) throw Error(ErrorCode::BadParams, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  constexpr i128 lim = static_cast<i128>(INT64_MAX);
  if (num > lim || num < -lim || den > lim) {
    throw Error(ErrorCode::BadParams, "rational overflow");
  }
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den_ == 0) throw Error(ErrorCode::BadParams, "rational with zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  const std::int64_t g = std::gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

Rational Rational::approximate(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw Error(ErrorCode::BadParams, "non-finite rational approximation");
  const bool neg = x < 0;
  long double r = std::abs(static_cast<long double>(x));
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const long double fl = std::floor(r);
    if (fl > 9.0e18L) break;
    const auto a = static_cast<std::int64_t>(fl);
    const i128 h2 = static_cast<i128>(a) * h1 + h0;
    const i128 k2 = static_cast<i128>(a) * k1 + k0;
    if (k2 > max_den || h2 > INT64_MAX) break;
    h0 = h1;
    h1 = static_cast<std::int64_t>(h2);
    k0 = k1;
    k1 = static_cast<std::int64_t>(k2);
    const long double frac = r - fl;
    if (frac < 1e-18L) break;
    r = 1.0L / frac;
  }
  if (k1 == 0) return Rational(neg ? -h1 : h1, 1);
  return Rational(neg ? -h1 : h1, k1);
}

Rational operator+(const Rational& a, const Rational& b) {
  return make_reduced(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                      static_cast<i128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make_reduced(static_cast<i128>(a.num_) * b.den_ - static_cast<i128>(b.num_) * a.den_,
                      static_cast<i128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make_reduced(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

// ---------------------------------------------------------------------------
// Complexity model

namespace {

template <class T>
T frac(std::int64_t a, std::int64_t b) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(a, b);
  } else {
    return static_cast<T>(a) / static_cast<T>(b);
  }
}

template <class T>
T model_impl(Algorithm algorithm, const T& rho, const LdFlags& f) {
  const T one = frac<T>(1, 1);
  const T gamma = f.gamma_half ? frac<T>(1, 2) : one;
  const T delta = f.delta_precomputed ? frac<T>(0, 1) : one;
  const T r2 = rho * rho;
  const T r3 = r2 * rho;
  switch (algorithm) {
    case Algorithm::LD1:
      if (f.spd) return frac<T>(1, 3) + frac<T>(1, 2) * rho + gamma * r2 + frac<T>(1, 3) * r3;
      return frac<T>(2, 3) + rho + r2 + frac<T>(2, 3) * r3;
    case Algorithm::LD2:
      if (f.orth) return frac<T>(2, 3) + frac<T>(2, 1) * rho;
      return frac<T>(2, 3) + frac<T>(2, 1) * rho + (gamma + frac<T>(1, 2)) * r2 +
             frac<T>(1, 3) * r3;
    case Algorithm::LD3: {
      const T q = one - rho;
      const T q2 = q * q;
      const T q3 = q2 * q;
      T total = q;
      total = total + (f.spd ? gamma * q2 + frac<T>(1, 3) * q3 : q2 + frac<T>(2, 3) * q3);
      if (f.orth) {
        total = total + frac<T>(2, 1) * delta * (one - r2);
      } else {
        total = total + frac<T>(2, 1) + gamma * r2 + frac<T>(1, 3) * r3;
      }
      return total;
    }
  }
  throw Error(ErrorCode::BadParams, "unknown algorithm");
}

}  // namespace

Rational complexity_model_exact(Algorithm algorithm, const Rational& rho, const LdFlags& flags) {
  return model_impl<Rational>(algorithm, rho, flags);
}

double complexity_model(Algorithm algorithm, double rho, const LdFlags& flags) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorCode::BadParams, "rho must lie in [0, 1]");
  return complexity_model_exact(algorithm, Rational::approximate(rho), flags).to_double();
}

std::optional<double> model_crossover(Algorithm challenger, const LdFlags& flags) {
  auto diff = [&](double r) {
    return model_impl<double>(challenger, r, flags) - model_impl<double>(Algorithm::LD1, r, flags);
  };
  // Curves that touch at rho = 0 are compared just inside the interval.
  double lo = diff(0.0) == 0.0 ? 1e-9 : 0.0, hi = 1.0;
  if (!(diff(lo) > 0.0) || !(diff(hi) < 0.0)) return std::nullopt;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Benchmark instances and the crossover scan

BenchInstance make_bench_instance(std::size_t n, bool spd, std::uint64_t seed) {
  BenchInstance inst;
  inst.A = spd ? random_spd(n, 0.1, 10.0, Rng::stream(seed, 0).next_u64())
               : random_general(n, Rng::stream(seed, 1).next_u64());
  Rng rng = Rng::stream(seed, 2);
  inst.x_raw = random_gaussian(n, n > 0 ? n - 1 : 0, rng);
  inst.x_orth = gram_schmidt(inst.x_raw);
  return inst;
}

DenseMatrix design_columns(const BenchInstance& inst, std::size_t p, bool orth) {
  return (orth ? inst.x_orth : inst.x_raw).leading_columns(p);
}

std::size_t columns_for(double rho, std::size_t n) {
  const auto p = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
  return std::clamp<std::size_t>(p, 1, n > 1 ? n - 1 : 1);
}

namespace {

std::optional<double> first_crossing(const std::vector<ScanRow>& rows, int challenger,
                                     bool measured) {
  auto value = [&](const ScanRow& r, int k) { return measured ? r.measured[k] : r.model[k]; };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double d = value(rows[i], challenger) - value(rows[i], 0);
    if (d < 0.0) {
      if (i == 0) return rows[0].rho;
      const double dprev = value(rows[i - 1], challenger) - value(rows[i - 1], 0);
      const double t = dprev / (dprev - d);
      return rows[i - 1].rho + t * (rows[i].rho - rows[i - 1].rho);
    }
  }
  return std::nullopt;
}

}  // namespace

CrossoverScan crossover_scan(std::size_t n, const LdFlags& flags,
                             const std::vector<double>& rho_grid, bool measured,
                             std::uint64_t seed) {
  CrossoverScan scan;
  std::optional<BenchInstance> inst;
  if (measured) inst = make_bench_instance(n, flags.spd, seed);
  const double n3 = std::pow(static_cast<double>(n), 3);
  for (double rho : rho_grid) {
    ScanRow row;
    row.rho = rho;
    for (int k = 0; k < 3; ++k) row.model[k] = complexity_model(kAllAlgorithms[k], rho, flags);
    if (measured) {
      row.p = columns_for(rho, n);
      const DenseMatrix x = design_columns(*inst, row.p, flags.orth);
      Ld3Options opt;
      if (flags.delta_precomputed && flags.orth) {
        opt.uperp = complement_basis(inst->x_orth.leading_columns(row.p), seed);
      }
      for (int k = 0; k < 3; ++k) {
        const LdResult r = run(kAllAlgorithms[k], inst->A, x, flags, opt);
        row.measured[k] = static_cast<double>(r.counter.weighted_total()) / n3;
      }
    }
    scan.rows.push_back(row);
  }
  scan.ld2_model = first_crossing(scan.rows, 1, false);
  scan.ld3_model = first_crossing(scan.rows, 2, false);
  if (measured) {
    scan.ld2_measured = first_crossing(scan.rows, 1, true);
    scan.ld3_measured = first_crossing(scan.rows, 2, true);
  }
  return scan;
}

}  // namespace pdetkit::ld
