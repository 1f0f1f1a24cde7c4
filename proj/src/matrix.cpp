#include "pdetkit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdetkit {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NotSPD: return "NotSPD";
    case ErrorCode::SingularToTolerance: return "SingularToTolerance";
    case ErrorCode::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ConditionsFailed: return "ConditionsFailed";
    case ErrorCode::NotComplementary: return "NotComplementary";
    case ErrorCode::SingularN: return "SingularN";
    case ErrorCode::SingularRestriction: return "SingularRestriction";
    case ErrorCode::NotEP: return "NotEP";
    case ErrorCode::IndexNotOne: return "IndexNotOne";
    case ErrorCode::KernelOverlap: return "KernelOverlap";
    case ErrorCode::RankDeficientX: return "RankDeficientX";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::RoutesDisagree: return "RoutesDisagree";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::ShapeMismatch, "data length does not equal rows*cols");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "non-finite matrix entry");
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::ShapeMismatch, "ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
  DenseMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

DenseMatrix DenseMatrix::column_vector(std::span<const double> values) {
  return DenseMatrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                               std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw Error(ErrorCode::ShapeMismatch, "block out of range");
  }
  DenseMatrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    std::copy_n(row_ptr(r0 + i) + c0, nc, b.row_ptr(i));
  return b;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> v) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw Error(ErrorCode::ShapeMismatch, "operator+=");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw Error(ErrorCode::ShapeMismatch, "operator-=");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "matmul");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

DenseMatrix hstack(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "hstack");
  DenseMatrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::copy_n(a.row_ptr(i), a.cols(), c.row_ptr(i));
    std::copy_n(b.row_ptr(i), b.cols(), c.row_ptr(i) + a.cols());
  }
  return c;
}

DenseMatrix vstack(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw Error(ErrorCode::ShapeMismatch, "vstack");
  DenseMatrix c(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), c.values().begin());
  std::copy(b.values().begin(), b.values().end(), c.values().begin() + a.size());
  return c;
}

double frobenius_norm(const DenseMatrix& a) noexcept {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) noexcept {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double relative_asymmetry(const DenseMatrix& a) {
  if (!a.is_square()) throw Error(ErrorCode::ShapeMismatch, "asymmetry of non-square matrix");
  const double norm = frobenius_norm(a);
  if (norm == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double d = a(i, j) - a(j, i);
      s += 2.0 * d * d;
    }
  return std::sqrt(s) / norm;
}

double relative_difference(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "relative_difference");
  }
  return frobenius_norm(a - b) / std::max(frobenius_norm(b), 1e-300);
}

SignedLogDet SignedLogDet::from_value(double v) noexcept {
  if (v == 0.0) return zero();
  return {v > 0 ? 1 : -1, std::log(std::abs(v))};
}

double SignedLogDet::value() const noexcept {
  return sign == 0 ? 0.0 : sign * std::exp(logabs);
}

SignedLogDet SignedLogDet::operator+(const SignedLogDet& other) const noexcept {
  if (is_zero() || other.is_zero()) return zero();
  return {sign * other.sign, logabs + other.logabs};
}

SignedLogDet SignedLogDet::operator-(const SignedLogDet& other) const noexcept {
  if (is_zero() || other.is_zero()) return zero();
  return {sign * other.sign, logabs - other.logabs};
}

SignedLogDet SignedLogDet::scaled(int k) const noexcept {
  if (is_zero()) return zero();
  const int s = (k % 2 == 0) ? 1 : sign;
  return {s, k * logabs};
}

const char* to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Cholesky: return "cholesky";
    case OpKind::Lu: return "lu";
    case OpKind::Trsm: return "trsm";
    case OpKind::Gemm: return "gemm";
    case OpKind::Gramian: return "gramian";
    case OpKind::GramSchmidt: return "gram_schmidt";
    case OpKind::Other: return "other";
  }
  return "unknown";
}

std::uint64_t OpCounter::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t OpCounter::model_weight(OpKind kind) noexcept {
  return (kind == OpKind::Cholesky || kind == OpKind::Lu) ? 2 : 1;
}

std::uint64_t OpCounter::weighted_total() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t k = 0; k < kOpKindCount; ++k)
    t += counts_[k] * model_weight(static_cast<OpKind>(k));
  return t;
}

void OpCounter::merge(const OpCounter& other) noexcept {
  for (std::size_t k = 0; k < kOpKindCount; ++k) counts_[k] += other.counts_[k];
}

}  // namespace pdetkit
