#include "pdetkit/gp.hpp"

#include <cmath>
#include <numbers>

#include "pdetkit/geninv.hpp"
#include "pdetkit/kernels.hpp"
#include "pdetkit/oracle.hpp"
#include "pdetkit/random.hpp"

namespace pdetkit::gp {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_model(const GPModel& m) {
  const std::size_t n = m.Sigma.rows();
  if (!m.Sigma.is_square() || m.X.rows() != n || m.y.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "GPModel expects Sigma n x n, X n x p, y of length n");
  }
}

DenseMatrix column(const std::vector<double>& v) { return DenseMatrix::column_vector(v); }

double sum_squares(const DenseMatrix& v) {
  double s = 0.0;
  for (double x : v.values()) s += x * x;
  return s;
}

// Projector onto X^perp, P = I - Q Q^T with Q = gs(X).
DenseMatrix perp_projector(const DenseMatrix& x) {
  const std::size_t n = x.rows();
  if (x.cols() == 0) return DenseMatrix::identity(n);
  const DenseMatrix q = gram_schmidt(x);
  return DenseMatrix::identity(n) - matmul(q, q.transpose());
}

// z^T z - c^T H^{-1} c for SPD H, c = W^T z.
double reduced_quadratic(const DenseMatrix& z, const DenseMatrix& w, const DenseMatrix& h) {
  double q = sum_squares(z);
  if (w.cols() == 0) return q;
  const DenseMatrix c = gemm(w, z, nullptr, Op::Transpose);
  const CholFactor lh = cholesky(h);
  q -= sum_squares(solve_triangular(lh.L, c, Triangle::Lower));
  return q;
}

}  // namespace

GPModel mixed_model(const DenseMatrix& k, const DenseMatrix& x, std::vector<double> y,
                    double sigma2, double varsigma2) {
  if (!k.is_square()) throw Error(ErrorCode::ShapeMismatch, "K must be square");
  if (!(sigma2 >= 0.0) || !(varsigma2 > 0.0)) {
    throw Error(ErrorCode::BadParams, "mixed model needs sigma2 >= 0 and varsigma2 > 0");
  }
  GPModel m;
  m.Sigma = sigma2 * k;
  for (std::size_t i = 0; i < k.rows(); ++i) m.Sigma(i, i) += varsigma2;
  m.X = x;
  m.y = std::move(y);
  check_model(m);
  return m;
}

double quadratic_m(const DenseMatrix& sigma, const DenseMatrix& x, const std::vector<double>& y) {
  const CholFactor l = cholesky(sigma);
  const DenseMatrix z = solve_triangular(l.L, column(y), Triangle::Lower);
  const DenseMatrix w = solve_triangular(l.L, x, Triangle::Lower);
  return reduced_quadratic(z, w, gramian(w, nullptr, GramMode::Full));
}

SingularLikelihood loglike_singular(const GPModel& model, ld::Algorithm backend) {
  check_model(model);
  const std::size_t n = model.Sigma.rows(), p = model.X.cols();
  SingularLikelihood out;

  const DenseMatrix y = column(model.y);
  const DenseMatrix yp = matmul(perp_projector(model.X), y);
  out.dropped_norm = std::sqrt(sum_squares(y - yp));

  ld::LdFlags flags;
  flags.spd = true;
  flags.orth = false;
  out.logdet_pair = ld::run(backend, model.Sigma, model.X, flags).value;
  if (out.logdet_pair.sign != 1) {
    throw Error(ErrorCode::NotSPD, "logdet pair of an SPD covariance must be positive");
  }
  std::vector<double> yv(yp.values().begin(), yp.values().end());
  out.quadratic = quadratic_m(model.Sigma, model.X, yv);
  out.value = -0.5 * static_cast<double>(n - p) * kLog2Pi - 0.5 * out.logdet_pair.logabs -
              0.5 * out.quadratic;
  return out;
}

double prior_quadratic(const GPModel& model, const PriorSpec& prior) {
  check_model(model);
  const std::size_t p = model.X.cols();
  if (prior.b.size() != p || prior.B.rows() != p || prior.B.cols() != p) {
    throw Error(ErrorCode::ShapeMismatch, "prior expects b of length p and B p x p");
  }
  const DenseMatrix r = column(model.y) - matmul(model.X, column(prior.b));
  const CholFactor l = cholesky(model.Sigma);
  const DenseMatrix z = solve_triangular(l.L, r, Triangle::Lower);
  const DenseMatrix w = solve_triangular(l.L, model.X, Triangle::Lower);
  DenseMatrix h = gramian(w, nullptr, GramMode::Full);
  if (p > 0) h += inverse(prior.B);
  return reduced_quadratic(z, w, h);
}

PriorLikelihood loglike_prior(const GPModel& model, const PriorSpec& prior) {
  check_model(model);
  const std::size_t n = model.Sigma.rows(), p = model.X.cols();
  if (prior.b.size() != p || prior.B.rows() != p || prior.B.cols() != p) {
    throw Error(ErrorCode::ShapeMismatch, "prior expects b of length p and B p x p");
  }
  const double base = -0.5 * static_cast<double>(n) * kLog2Pi;
  const DenseMatrix r = column(model.y) - matmul(model.X, column(prior.b));

  // Determinant lemma: |Sigma~| = |Sigma| |B| |X^T Sigma^{-1} X + B^{-1}|.
  const CholFactor l = cholesky(model.Sigma);
  const DenseMatrix z = solve_triangular(l.L, r, Triangle::Lower);
  const DenseMatrix w = solve_triangular(l.L, model.X, Triangle::Lower);
  DenseMatrix h = gramian(w, nullptr, GramMode::Full);
  double logdet_direct = 2.0 * logdet_triangular(l).logabs;
  if (p > 0) {
    h += inverse(prior.B);
    logdet_direct += 2.0 * logdet_triangular(cholesky(prior.B)).logabs +
                     2.0 * logdet_triangular(cholesky(h)).logabs;
  }
  PriorLikelihood out;
  out.direct = base - 0.5 * logdet_direct - 0.5 * reduced_quadratic(z, w, h);

  // Equivalent covariance Sigma~ = Sigma + X B X^T.
  const DenseMatrix st = model.Sigma + matmul(matmul(model.X, prior.B), model.X.transpose());
  const CholFactor lt = cholesky(st);
  const DenseMatrix zt = solve_triangular(lt.L, r, Triangle::Lower);
  out.woodbury = base - logdet_triangular(lt).logabs - 0.5 * sum_squares(zt);

  out.value = out.woodbury;
  if (std::abs(out.direct - out.woodbury) > 1e-8 * (1.0 + std::abs(out.woodbury))) {
    throw Error(ErrorCode::RoutesDisagree, "prior likelihood routes disagree");
  }
  return out;
}

DenseMatrix precision_matrix(const DenseMatrix& sigma, const DenseMatrix& x) {
  const DenseMatrix si = inverse(sigma);
  if (x.cols() == 0) return si;
  const DenseMatrix sx = matmul(si, x);
  const DenseMatrix g = matmul(x.transpose(), sx);
  return si - matmul(matmul(sx, inverse(g)), sx.transpose());
}

DenseMatrix precision_bott_duffin(const GPModel& model) {
  check_model(model);
  const std::size_t n = model.Sigma.rows();
  if (model.X.cols() == 0) return geninv::bott_duffin(model.Sigma, DenseMatrix::identity(n));
  const DenseMatrix q = gram_schmidt(model.X);
  return geninv::bott_duffin(model.Sigma, complement_basis(q, 0xb0771e));
}

double lambda_max(const DenseMatrix& k) {
  if (!k.is_square()) throw Error(ErrorCode::ShapeMismatch, "lambda_max");
  const std::size_t n = k.rows();
  if (n == 0) return 0.0;
  if (n <= oracle::kOracleMaxN) return oracle::jacobi_eigen(k).values.front();

  Rng rng(0x9a11);
  DenseMatrix v = random_gaussian(n, 1, rng);
  v *= 1.0 / std::sqrt(sum_squares(v));
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    DenseMatrix kv = matmul(k, v);
    const double next = dot(v.values(), kv.values());
    const double norm = std::sqrt(sum_squares(kv));
    if (norm == 0.0) return 0.0;
    kv *= 1.0 / norm;
    v = std::move(kv);
    if (std::abs(next - lambda) <= 1e-10 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

NeumannResult neumann_precision(const DenseMatrix& k, const DenseMatrix& x, double t,
                                double varsigma2, int order, bool force) {
  if (!k.is_square() || x.rows() != k.rows()) throw Error(ErrorCode::ShapeMismatch, "neumann");
  if (!(t >= 0.0) || !(varsigma2 > 0.0) || order < 0) {
    throw Error(ErrorCode::BadParams, "neumann needs t >= 0, varsigma2 > 0, order >= 0");
  }
  NeumannResult out;
  out.lambda_max = lambda_max(k);
  out.ratio = t * out.lambda_max;
  const double guard = k.rows() <= oracle::kOracleMaxN ? out.ratio : 1.1 * out.ratio;
  if (guard >= 1.0 && !force) {
    throw Error(ErrorCode::Divergent, "t * lambda_max >= 1: the series does not converge");
  }

  const DenseMatrix p = perp_projector(x);
  DenseMatrix step = matmul(k, p);
  step *= -t;
  DenseMatrix term = DenseMatrix::identity(k.rows());
  DenseMatrix sum = term;
  for (int i = 1; i <= order; ++i) {
    term = matmul(term, step);
    sum += term;
  }
  out.M = (1.0 / varsigma2) * matmul(p, sum);
  return out;
}

DenseMatrix neumann_exact(const DenseMatrix& k, const DenseMatrix& x, double t, double varsigma2) {
  const DenseMatrix p = perp_projector(x);
  DenseMatrix b = matmul(k, p);
  b *= t;
  for (std::size_t i = 0; i < b.rows(); ++i) b(i, i) += 1.0;
  return (1.0 / varsigma2) * matmul(p, inverse(b));
}

}  // namespace pdetkit::gp
