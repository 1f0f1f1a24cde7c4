// Dense matrix carrier, signed log-determinants, MAC operation counting and
// the error type shared by every pdetkit module.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdetkit {

// Tolerances shared across modules. All are relative.
inline constexpr double kOrthTol = 1e-10;
inline constexpr double kRankTol = 1e-12;
inline constexpr double kSymTol = 1e-10;
inline constexpr double kPivotTol = 1e-13;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorCode {
  ShapeMismatch,
  InvalidInput,
  NotSPD,
  SingularToTolerance,
  ZeroDiagonal,
  RankDeficient,
  BadParams,
  NotSymmetric,
  TooLarge,
  ConditionsFailed,
  NotComplementary,
  SingularN,
  SingularRestriction,
  NotEP,
  IndexNotOne,
  KernelOverlap,
  RankDeficientX,
  Divergent,
  RoutesDisagree,
  IoError,
  BadConfig,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Row-major real matrix. Zero extents are allowed so that empty column
// blocks (p = 0) flow through the algorithms without special cases.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Rejects non-finite entries and size mismatches.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);
  static DenseMatrix column_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  double* row_ptr(std::size_t i) noexcept { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const noexcept { return data_.data() + i * cols_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  DenseMatrix transpose() const;
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  DenseMatrix leading_columns(std::size_t p) const { return block(0, 0, rows_, p); }
  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  bool operator==(const DenseMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

// Uncounted product for identity checks and small assembly work.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hstack(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix vstack(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a) noexcept;
double max_abs(const DenseMatrix& a) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
// ||A - A^T||_F / ||A||_F, 0 for the zero matrix.
double relative_asymmetry(const DenseMatrix& a);
// ||A - B||_F / max(||B||_F, tiny)
double relative_difference(const DenseMatrix& a, const DenseMatrix& b);

// (sign, log|det|). sign == 0 carries logabs == -inf.
struct SignedLogDet {
  int sign = 1;
  double logabs = 0.0;

  static SignedLogDet zero() noexcept { return {0, kNegInf}; }
  static SignedLogDet from_value(double v) noexcept;
  bool is_zero() const noexcept { return sign == 0; }
  double value() const noexcept;

  // Product of determinants.
  SignedLogDet operator+(const SignedLogDet& other) const noexcept;
  // Quotient of determinants; dividing by zero yields zero.
  SignedLogDet operator-(const SignedLogDet& other) const noexcept;
  SignedLogDet scaled(int k) const noexcept;
};

enum class OpKind : std::size_t { Cholesky, Lu, Trsm, Gemm, Gramian, GramSchmidt, Other };
inline constexpr std::size_t kOpKindCount = 7;

const char* to_string(OpKind kind) noexcept;

// Tally of multiply-accumulate operations per kernel category. One counter
// per thread of execution; merge after joining.
class OpCounter {
 public:
  void add(OpKind kind, std::uint64_t macs) noexcept {
    counts_[static_cast<std::size_t>(kind)] += macs;
  }
  std::uint64_t get(OpKind kind) const noexcept {
    return counts_[static_cast<std::size_t>(kind)];
  }
  std::uint64_t total() const noexcept;

  // Inner-loop MACs re-weighted to the per-task constants of the complexity
  // table: factorizations are charged twice their true MAC count (Cholesky
  // n^3/3, LU 2n^3/3), every other category at face value.
  std::uint64_t weighted_total() const noexcept;
  static std::uint64_t model_weight(OpKind kind) noexcept;

  void merge(const OpCounter& other) noexcept;
  void reset() noexcept { counts_.fill(0); }

 private:
  std::array<std::uint64_t, kOpKindCount> counts_{};
};

inline void charge(OpCounter* counter, OpKind kind, std::uint64_t macs) noexcept {
  if (counter != nullptr) counter->add(kind, macs);
}

}  // namespace pdetkit
