#include "zubov/linlyap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace zubov {

std::vector<double> symmetric_eigen(const Eigen::MatrixXd& m, double tolerance) {
  if (m.rows() != m.cols()) throw LyapunovError("symmetric_eigen: matrix is not square");
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw LyapunovError("symmetric_eigen: matrix is not symmetric");
  }
  Eigen::MatrixXd a = 0.5 * (m + m.transpose());
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) s += a(i, j) * a(i, j);
      }
    }
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < 100 && off_norm() > tolerance; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        // Rotation angle that annihilates a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

bool is_hurwitz(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
  if (solver.info() != Eigen::Success) return false;
  return (solver.eigenvalues().real().array() < 0.0).all();
}

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

}  // namespace

Eigen::MatrixXd solve_stochastic_lyapunov(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& S,
                                          const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) throw LyapunovError("dimension mismatch");
  for (const auto& s : S) {
    if (s.rows() != n || s.cols() != n) throw LyapunovError("dimension mismatch in noise matrices");
  }
  if (!is_hurwitz(A)) throw LyapunovError("A is not Hurwitz");
  const auto q_eig = symmetric_eigen(Q);
  if (q_eig.front() <= 0.0) throw LyapunovError("Q is not positive definite");

  // Column-major vec: vec(PA) = (A^T (x) I) vec P, vec(A^T P) = (I (x) A^T) vec P,
  // vec(S^T P S) = (S^T (x) S^T) vec P.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd K = kron(At, I) + kron(I, At);
  for (const auto& s : S) K += kron(s.transpose(), s.transpose());

  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw LyapunovError("vectorized Lyapunov operator is singular");
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::VectorXd p = lu.solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(p.data(), n, n);
  P = (0.5 * (P + P.transpose())).eval();

  const auto p_eig = symmetric_eigen(P);
  if (p_eig.front() <= 0.0) {
    throw LyapunovError("solution P is not positive definite (noise too strong for a quadratic certificate)");
  }
  return P;
}

double stochastic_lyapunov_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A,
                                    const std::vector<Eigen::MatrixXd>& S, const Eigen::MatrixXd& Q) {
  Eigen::MatrixXd R = P * A + A.transpose() * P + Q;
  for (const auto& s : S) R += s.transpose() * P * s;
  return R.norm();
}

Expression quadratic_form(const Eigen::MatrixXd& P) {
  const Eigen::Index n = P.rows();
  std::vector<Expression> terms;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Expression xi = Expression::variable(static_cast<std::size_t>(i));
    terms.push_back(P(i, i) * pow(xi, 2));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Expression xj = Expression::variable(static_cast<std::size_t>(j));
      terms.push_back((P(i, j) + P(j, i)) * (xi * xj));
    }
  }
  return sum(terms);
}

LocalCertificateExpressions local_certificate_expressions(const StochasticSystem& sys, const Eigen::MatrixXd& P,
                                                          const Eigen::MatrixXd& Q) {
  const std::size_t n = sys.n();
  LocalCertificateExpressions out;
  out.V = quadratic_form(P);
  out.h = generator_apply(sys, out.V);
  std::vector<Expression> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i] = differentiate(out.h, i);
  out.M.resize(n * n);
  std::vector<Expression> squares;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.M[i * n + j] =
          differentiate(grad[i], j) + Expression::constant(2.0 * Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      squares.push_back(pow(out.M[i * n + j], 2));
    }
  }
  out.frobenius_squared = sum(squares);
  return out;
}

double default_epsilon(const Eigen::MatrixXd& Q) { return 1e-4 * symmetric_eigen(Q).front(); }

double ellipsoid_cap(const Eigen::MatrixXd& P, const Box& domain) {
  // max |x_i| over {x^T P x <= c} is sqrt(c (P^-1)_ii).
  const Eigen::MatrixXd Pinv = P.inverse();
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    const double reach = std::min(-domain[i].lo, domain[i].hi);
    const double pii = Pinv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    cap = std::min(cap, reach * reach / pii);
  }
  return cap;
}

}  // namespace zubov
