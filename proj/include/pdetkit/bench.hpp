// Benchmark sweeps, verification suites, analytic model tables and the GP
// demo behind the pdetkit command-line tool.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdetkit/logdet.hpp"

namespace pdetkit::bench {

inline constexpr const char* kCsvHeader =
    "algorithm,n,p,rho,spd,orth,gamma,delta,trial,macs_total,macs_per_n3,wall_ns,sign,logabs";

// 32 evenly spaced points strictly inside (0, 1): k / 33, k = 1..32.
std::vector<double> default_rho_grid();
// step, 2 step, ... strictly below 1.
std::vector<double> rho_grid_from_step(double step);
// Comma-separated list of reals in (0, 1).
std::vector<double> parse_rho_list(const std::string& text);

struct BenchConfig {
  std::size_t n = 256;
  std::vector<double> rho_grid = default_rho_grid();
  std::vector<ld::Algorithm> algorithms{ld::Algorithm::LD1, ld::Algorithm::LD2,
                                        ld::Algorithm::LD3};
  ld::LdFlags flags;
  std::size_t trials = 5;
  std::uint64_t seed = 1;
  bool raw = false;  // one row per trial instead of the median row
  std::optional<DenseMatrix> load_a;
  std::optional<DenseMatrix> load_x;
  std::size_t threads = 1;
};

// Throws BadConfig for an empty grid, rho outside (0, 1), trials == 0,
// n < 2 or loaded matrices of the wrong shape.
void validate(const BenchConfig& config);

struct CsvRow {
  ld::Algorithm algorithm = ld::Algorithm::LD1;
  std::size_t n = 0, p = 0;
  double rho = 0.0;
  bool spd = false, orth = false, gamma_half = true, delta_precomputed = false;
  std::string trial;  // trial index, or "median" for aggregated rows
  std::uint64_t macs_total = 0;  // weighted MAC total, see OpCounter::weighted_total
  std::uint64_t wall_ns = 0;
  int sign = 1;
  double logabs = 0.0;

  double macs_per_n3() const noexcept;
  std::string to_csv() const;
};

// Rows ordered by (algorithm, rho, trial). Every trial of a given rho uses
// matrices drawn from Rng::stream(seed, trial); MAC counts and values do
// not depend on the thread count.
std::vector<CsvRow> run_bench(const BenchConfig& config);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

struct ModelRow {
  ld::Algorithm algorithm;
  ld::LdFlags flags;
  ld::Rational rho;
  ld::Rational value;
};
// Every algorithm x (spd, orth, gamma, delta) curve on rho = 0, step, ..., 1.
std::vector<ModelRow> run_model(const ld::Rational& rho_step);
void write_model_csv(std::ostream& out, const std::vector<ModelRow>& rows);

struct PropertyResult {
  std::string suite;
  std::string name;
  std::size_t cases = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct VerifyOptions {
  std::string suite = "all";  // kernels, geninv, pdet, logdet, gp, all
  std::uint64_t seed = 1;
  std::size_t count = 20;
  bool sabotage = false;  // flips one matrix entry to exercise the failure path
};

std::vector<PropertyResult> run_verify(const VerifyOptions& options);
void write_verify_report(std::ostream& out, const std::vector<PropertyResult>& results);

// The individual suites with explicit sizes. `count` is the number of
// seeded instances (per flag combination for the logdet suite).
std::vector<PropertyResult> verify_kernels(std::uint64_t seed, std::size_t count,
                                           std::size_t counter_n, bool sabotage = false);
std::vector<PropertyResult> verify_geninv(std::uint64_t seed, std::size_t count,
                                          std::size_t max_n, bool sabotage = false);
std::vector<PropertyResult> verify_pdet(std::uint64_t seed, std::size_t count, std::size_t max_n,
                                        bool sabotage = false);
std::vector<PropertyResult> verify_logdet(std::uint64_t seed, std::size_t count,
                                          const std::vector<std::size_t>& sizes,
                                          bool sabotage = false);
std::vector<PropertyResult> verify_gp(std::uint64_t seed, std::size_t count,
                                      bool sabotage = false);

// Ratio of successive Neumann truncation errors, fitted over orders
// 2..10 as (e_10 / e_2)^{1/8}, for an instance with t lambda_max = target.
struct NeumannDecay {
  double fitted_ratio = 0.0;
  // max_k |e_{k+1} / e_k - t lambda| / (t lambda) over k = 2..9
  double max_step_deviation = 0.0;
  double max_constant = 0.0;  // max_k e_k / ((t lambda)^{k+1} ||M||)
  double exact_residual = 0.0;  // ||series(30) - M|| / ||M||
};
NeumannDecay measure_neumann_decay(std::size_t n, std::size_t p, double target,
                                   std::uint64_t seed);

// K = Q diag(1, lambda_2, ...) Q^T, lambda_i log-uniform in [0.02, 0.3],
// whose leading eigenvector lies in X^perp, so lambda_max(K) =
// lambda_max(P K P) = 1.
DenseMatrix neumann_kernel(const DenseMatrix& x, std::uint64_t seed);

struct GpDemoOptions {
  std::size_t n = 64;
  std::size_t p = 4;
  double t = 0.3;  // target t lambda_max; K is scaled to lambda_max = 1
  int order = 10;
  std::uint64_t seed = 1;
};

// Returns false when a cross-check fails. Throws Divergent for t >= 1.
bool gp_demo(const GpDemoOptions& options, std::ostream& out);

}  // namespace pdetkit::bench
