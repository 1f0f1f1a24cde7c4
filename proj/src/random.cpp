#include "pdetkit/random.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "pdetkit/kernels.hpp"

namespace pdetkit {

std::uint64_t Rng::next_u64() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) noexcept {
  Rng mixer(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return Rng(mixer.next_u64());
}

DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

DenseMatrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  return complement_basis(DenseMatrix(n, 0), seed);
}

namespace {

std::vector<double> log_uniform(std::size_t n, double lo, double hi, Rng& rng) {
  std::vector<double> v(n);
  const double a = std::log(lo), b = std::log(hi);
  for (double& x : v) x = std::exp(a + (b - a) * rng.uniform());
  return v;
}

// Q diag(lambda) Q^T, symmetrized exactly.
DenseMatrix spectral(const DenseMatrix& q, const std::vector<double>& lambda) {
  const std::size_t n = q.rows(), r = q.cols();
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < r; ++k) s += q(i, k) * lambda[k] * q(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  return a;
}

}  // namespace

DenseMatrix random_spd(std::size_t n, double eigmin, double eigmax, std::uint64_t seed) {
  if (!(eigmin > 0.0) || !(eigmin <= eigmax) || !std::isfinite(eigmax)) {
    throw Error(ErrorCode::BadParams, "random_spd requires 0 < eigmin <= eigmax");
  }
  Rng rng = Rng::stream(seed, 0);
  const auto lambda = log_uniform(n, eigmin, eigmax, rng);
  return spectral(random_orthogonal(n, Rng::stream(seed, 1).next_u64()), lambda);
}

DenseMatrix random_indefinite(std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0);
  auto lambda = log_uniform(n, 0.5, 5.0, rng);
  bool any_negative = false;
  for (double& l : lambda) {
    if (rng.uniform() < 0.5) {
      l = -l;
      any_negative = true;
    }
  }
  if (!any_negative && n > 0) lambda[0] = -lambda[0];
  return spectral(random_orthogonal(n, Rng::stream(seed, 1).next_u64()), lambda);
}

DenseMatrix random_general(std::size_t n, std::uint64_t seed, double shift) {
  Rng rng = Rng::stream(seed, 0);
  DenseMatrix a = random_gaussian(n, n, rng);
  if (n > 0) a *= 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) a(i, i) += shift;
  return a;
}

DenseMatrix random_ep(std::size_t n, std::size_t rank, std::uint64_t seed, EpKind kind) {
  if (rank > n) throw Error(ErrorCode::BadParams, "random_ep requires rank <= n");
  const DenseMatrix qr = random_orthogonal(n, Rng::stream(seed, 0).next_u64()).leading_columns(rank);
  DenseMatrix core;
  if (kind == EpKind::Symmetric) {
    core = random_indefinite(rank, Rng::stream(seed, 1).next_u64());
  } else {
    Rng rng = Rng::stream(seed, 2);
    core = DenseMatrix::diagonal(log_uniform(rank, 0.5, 2.0, rng));
    const double scale = 0.5 / std::sqrt(static_cast<double>(std::max<std::size_t>(rank, 1)));
    for (std::size_t i = 0; i < rank; ++i)
      for (std::size_t j = i + 1; j < rank; ++j) {
        const double s = scale * rng.normal();
        core(i, j) += s;
        core(j, i) -= s;
      }
  }
  return matmul(matmul(qr, core), qr.transpose());
}

}  // namespace pdetkit
