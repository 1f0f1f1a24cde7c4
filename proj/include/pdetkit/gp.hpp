// Gaussian-process likelihoods with a linear mean X beta.
//
// Improper (flat) prior on beta, restricted to y in X^perp:
//   log p = -(n - p)/2 log 2 pi - 1/2 logdet(Sigma) - 1/2 logdet(X^T Sigma^{-1} X) - 1/2 y^T M y,
//   M = Sigma^{-1} - Sigma^{-1} X (X^T Sigma^{-1} X)^{-1} X^T Sigma^{-1}.
//
// Normal prior beta ~ N(b, B):
//   log p = -n/2 log 2 pi - 1/2 logdet(Sigma~) - 1/2 r^T Sigma~^{-1} r,
//   Sigma~ = Sigma + X B X^T,  r = y - X b.
//
// Mixed models use Sigma = sigma^2 K + varsigma^2 I = varsigma^2 (I + t K).

#pragma once

#include <vector>

#include "pdetkit/logdet.hpp"
#include "pdetkit/matrix.hpp"

namespace pdetkit::gp {

struct GPModel {
  std::vector<double> y;  // length n
  DenseMatrix X;          // n x p, full column rank
  DenseMatrix Sigma;      // n x n SPD
};

// Sigma = sigma2 K + varsigma2 I.
GPModel mixed_model(const DenseMatrix& k, const DenseMatrix& x, std::vector<double> y,
                    double sigma2, double varsigma2);

struct PriorSpec {
  std::vector<double> b;  // length p
  DenseMatrix B;          // p x p SPD
};

struct SingularLikelihood {
  double value = 0.0;
  double dropped_norm = 0.0;  // ||P_X y||, removed before evaluation
  SignedLogDet logdet_pair;   // logdet(Sigma) + logdet(X^T Sigma^{-1} X)
  double quadratic = 0.0;     // y^T M y for the projected y
};

SingularLikelihood loglike_singular(const GPModel& model,
                                    ld::Algorithm backend = ld::Algorithm::LD1);

// y^T M y through L = chol(Sigma), z = L^{-1} y, W = L^{-1} X:
//   z^T z - (W^T z)^T (W^T W)^{-1} (W^T z).
double quadratic_m(const DenseMatrix& sigma, const DenseMatrix& x, const std::vector<double>& y);

// r^T M_B r with r = y - X b and
//   M_B = Sigma^{-1} - Sigma^{-1} X (X^T Sigma^{-1} X + B^{-1})^{-1} X^T Sigma^{-1}.
double prior_quadratic(const GPModel& model, const PriorSpec& prior);

struct PriorLikelihood {
  double value = 0.0;     // Woodbury route
  double direct = 0.0;    // determinant lemma route
  double woodbury = 0.0;
};

// Evaluates both routes and throws RoutesDisagree when they differ by more
// than 1e-8 (1 + |value|).
PriorLikelihood loglike_prior(const GPModel& model, const PriorSpec& prior);

// M formed directly from the definition above.
DenseMatrix precision_matrix(const DenseMatrix& sigma, const DenseMatrix& x);

// M = P_{X^perp} (P_X + Sigma P_{X^perp})^{-1}.
DenseMatrix precision_bott_duffin(const GPModel& model);

// Largest eigenvalue of a symmetric PSD matrix: Jacobi for n <= 256, power
// iteration (relative tolerance 1e-10) beyond.
double lambda_max(const DenseMatrix& k);

struct NeumannResult {
  DenseMatrix M;
  double lambda_max = 0.0;
  double ratio = 0.0;  // t * lambda_max, the geometric error ratio
};

// varsigma^{-2} P sum_{i=0}^{order} (-t K P)^i with P = P_{X^perp}. Throws
// Divergent when t lambda_max >= 1 unless `force`. Power-iteration
// estimates are inflated by 10% before the guard is applied.
NeumannResult neumann_precision(const DenseMatrix& k, const DenseMatrix& x, double t,
                                double varsigma2, int order, bool force = false);

// varsigma^{-2} P (I + t K P)^{-1}, the limit of the series.
DenseMatrix neumann_exact(const DenseMatrix& k, const DenseMatrix& x, double t, double varsigma2);

}  // namespace pdetkit::gp
