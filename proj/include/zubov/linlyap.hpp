#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "zubov/expr.hpp"
#include "zubov/system.hpp"
#include "zubov/verify.hpp"

namespace zubov {

class LyapunovError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations until the off-diagonal Frobenius norm drops below `tolerance`.
/// Throws LyapunovError for non-symmetric input.
std::vector<double> symmetric_eigen(const Eigen::MatrixXd& m, double tolerance = 1e-12);

bool is_hurwitz(const Eigen::MatrixXd& A);

/// Solves P A + A^T P + sum_i S_i^T P S_i = -Q through the n^2 x n^2
/// vectorized system. Throws LyapunovError when A is not Hurwitz, Q is not
/// symmetric positive definite, the vectorized operator is singular, or the
/// solution is not positive definite.
Eigen::MatrixXd solve_stochastic_lyapunov(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& S,
                                          const Eigen::MatrixXd& Q);

/// || P A + A^T P + sum S^T P S + Q ||_F
double stochastic_lyapunov_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A,
                                    const std::vector<Eigen::MatrixXd>& S, const Eigen::MatrixXd& Q);

/// x^T P x as an expression.
Expression quadratic_form(const Eigen::MatrixXd& P);

/// h = L(x^T P x) and M = D^2 h + 2Q (row-major n x n).
struct LocalCertificateExpressions {
  Expression V;
  Expression h;
  std::vector<Expression> M;
  /// sum_ij M_ij^2, compared against (2r)^2.
  Expression frobenius_squared;
};

LocalCertificateExpressions local_certificate_expressions(const StochasticSystem& sys, const Eigen::MatrixXd& P,
                                                          const Eigen::MatrixXd& Q);

/// epsilon = 1e-4 * lambda_min(Q).
double default_epsilon(const Eigen::MatrixXd& Q);

/// Largest c with {x^T P x <= c} inside the box (the box must contain 0).
double ellipsoid_cap(const Eigen::MatrixXd& P, const Box& domain);

/// Largest c (bisection, relative tolerance from `options`) such that
/// x^T P x <= c implies ||M(x)||_F^2 <= 4 r^2 is certified. The cap defaults
/// to ellipsoid_cap. Throws LevelSearchError when even the smallest probe
/// cannot be certified and std::invalid_argument when r <= 0.
LevelResult find_local_level(const StochasticSystem& sys, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                             double r, const LevelSearchOptions& options, std::optional<double> cap = std::nullopt);

struct QuadraticCertificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  double epsilon = 0.0;
  double r = 0.0;
  double c_local = 0.0;
  double c2 = 0.0;
  double zeta = 0.0;
  bool solved = false;
  bool local_verified = false;
  bool extended_verified = false;
  VerifyOutcome local_outcome;
  VerifyOutcome extended_outcome;
};

}  // namespace zubov
