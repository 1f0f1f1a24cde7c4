// Seedable portable random numbers and the test/benchmark matrix generators.

#pragma once

#include <cstdint>

#include "pdetkit/matrix.hpp"

namespace pdetkit {

// SplitMix64: 64-bit state advanced by the golden-ratio increment
// 0x9E3779B97F4A7C15 and finalized with the variant-13 mixer
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z ^ (z >> 31)
// Uniforms take the top 53 bits; normals use the cosine branch of
// Box-Muller with u1 in (0, 1]. Nothing here depends on <random>
// distributions, whose output differs between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // [0, 1)
  double normal() noexcept;

  // Independent stream for (seed, index): trials, per-column retries, etc.
  static Rng stream(std::uint64_t seed, std::uint64_t index) noexcept;

 private:
  std::uint64_t state_;
};

DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng);
DenseMatrix random_orthogonal(std::size_t n, std::uint64_t seed);

// Q diag(lambda) Q^T, lambda log-uniform in [eigmin, eigmax].
DenseMatrix random_spd(std::size_t n, double eigmin, double eigmax, std::uint64_t seed);

// Same construction with random sign flips (at least one negative
// eigenvalue); magnitudes log-uniform in [0.5, 5].
DenseMatrix random_indefinite(std::size_t n, std::uint64_t seed);

// G / sqrt(n) + shift I with G standard Gaussian: nonsymmetric, and for
// shift >= 2 its eigenvalues stay well away from zero with high probability.
DenseMatrix random_general(std::size_t n, std::uint64_t seed, double shift = 2.0);

enum class EpKind { Nonsymmetric, Symmetric };

// Q_r core Q_r^T with Q_r the first `rank` columns of a random orthogonal
// matrix. The nonsymmetric core is D + S (D positive diagonal in [0.5, 2],
// S skew), so its symmetric part is positive definite; the symmetric core
// is an indefinite matrix from random_indefinite.
DenseMatrix random_ep(std::size_t n, std::size_t rank, std::uint64_t seed,
                      EpKind kind = EpKind::Nonsymmetric);

}  // namespace pdetkit
