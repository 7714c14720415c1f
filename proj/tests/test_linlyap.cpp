#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "zubov/linlyap.hpp"

using namespace zubov;

namespace {

// Row-major vectorization of P A + A^T P + sum S^T P S = -Q solved with a
// QR factorization: a different layout and factorization than the library.
Eigen::MatrixXd lyapunov_oracle(const Eigen::MatrixXd& A, const std::vector<Eigen::MatrixXd>& S, const Eigen::MatrixXd& Q) {
  const auto n = A.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = i * n + j;
      for (Eigen::Index k = 0; k < n; ++k) {
        K(row, i * n + k) += A(k, j);  // (P A)_ij
        K(row, k * n + j) += A(k, i);  // (A^T P)_ij
        for (const auto& s : S) {
          for (Eigen::Index l = 0; l < n; ++l) K(row, k * n + l) += s(k, i) * s(l, j);
        }
      }
    }
  }
  Eigen::VectorXd rhs(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) rhs[i * n + j] = -Q(i, j);
  }
  const Eigen::VectorXd p = K.colPivHouseholderQr().solve(rhs);
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) P(i, j) = p[i * n + j];
  }
  return P;
}

Eigen::MatrixXd random_stable(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = g(rng);
  }
  // Shift the spectrum left of the imaginary axis by a margin.
  const Eigen::VectorXcd ev = M.eigenvalues();
  double max_re = -1e300;
  for (Eigen::Index i = 0; i < n; ++i) max_re = std::max(max_re, ev[i].real());
  return M - (max_re + 1.0) * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("deterministic diagonal case") {
  const Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd P = solve_stochastic_lyapunov(A, {Eigen::MatrixXd::Zero(2, 2)}, Eigen::MatrixXd::Identity(2, 2));
  CHECK((P - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("Van der Pol P") {
  const Linearization lin = linearize(van_der_pol());
  const Eigen::MatrixXd P = solve_stochastic_lyapunov(lin.A, lin.S, Eigen::MatrixXd::Identity(2, 2));
  // Exact solution 1/41 [[92, -32], [-32, 60]].
  CHECK(P(0, 0) == doctest::Approx(92.0 / 41.0).epsilon(1e-12));
  CHECK(P(0, 1) == doctest::Approx(-32.0 / 41.0).epsilon(1e-12));
  CHECK(P(1, 0) == doctest::Approx(-32.0 / 41.0).epsilon(1e-12));
  CHECK(P(1, 1) == doctest::Approx(60.0 / 41.0).epsilon(1e-12));
  const auto ev = symmetric_eigen(P);
  CHECK(ev[0] > 0.0);
  // Roots of t^2 - tr t + det.
  const double tr = P.trace();
  const double det = P.determinant();
  CHECK(ev[0] == doctest::Approx(0.5 * (tr - std::sqrt(tr * tr - 4 * det))).epsilon(1e-10));
  CHECK(ev[1] == doctest::Approx(0.5 * (tr + std::sqrt(tr * tr - 4 * det))).epsilon(1e-10));
}

TEST_CASE("solver errors") {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 0, 0;
  CHECK_THROWS_AS(solve_stochastic_lyapunov(A, {}, Eigen::MatrixXd::Identity(2, 2)), LyapunovError);
  // Noise strong enough to destroy mean-square stability.
  const Eigen::MatrixXd stable = -Eigen::MatrixXd::Identity(2, 2);
  const std::vector<Eigen::MatrixXd> loud{2.0 * Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS(solve_stochastic_lyapunov(stable, loud, Eigen::MatrixXd::Identity(2, 2)), LyapunovError);
  Eigen::MatrixXd Q(2, 2);
  Q << 1, 0, 0, -1;
  CHECK_THROWS_AS(solve_stochastic_lyapunov(stable, {}, Q), LyapunovError);
}

TEST_CASE("random stable instances satisfy the equation") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    const Eigen::MatrixXd A = random_stable(rng, n);
    std::vector<Eigen::MatrixXd> S;
    for (int k = 0; k < 2; ++k) {
      Eigen::MatrixXd s(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) s(i, j) = 0.1 * g(rng);
      }
      S.push_back(s);
    }
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd P = solve_stochastic_lyapunov(A, S, Q);
    CHECK(stochastic_lyapunov_residual(P, A, S, Q) <= 1e-8);
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK((P - lyapunov_oracle(A, S, Q)).norm() <= 1e-8 * std::max(1.0, P.norm()));

    const Eigen::MatrixXd P0 = solve_stochastic_lyapunov(A, {}, Q);
    CHECK((P0 - lyapunov_oracle(A, {}, Q)).norm() <= 1e-10 * std::max(1.0, P0.norm()));
  }
}

TEST_CASE("Jacobi eigenvalues") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  auto ev = symmetric_eigen(I);
  CHECK(ev[0] == doctest::Approx(1.0));
  CHECK(ev[1] == doctest::Approx(1.0));
  Eigen::MatrixXd M(2, 2);
  M << 2, 1, 1, 2;
  ev = symmetric_eigen(M);
  CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));

  // 3x3: trigonometric roots of the characteristic cubic.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd B(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) B(i, j) = g(rng);
    }
    const Eigen::MatrixXd S = B + B.transpose();
    const double q = S.trace() / 3.0;
    const Eigen::MatrixXd C = S - q * Eigen::MatrixXd::Identity(3, 3);
    const double p = std::sqrt((C * C).trace() / 6.0);
    const double r = std::clamp((C / p).determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2 * p * std::cos(phi);
    const double e3 = q + 2 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3 * q - e1 - e3;
    const auto got = symmetric_eigen(S);
    CHECK(got[0] == doctest::Approx(e3).epsilon(1e-10));
    CHECK(got[1] == doctest::Approx(e2).epsilon(1e-10));
    CHECK(got[2] == doctest::Approx(e1).epsilon(1e-10));
  }
  Eigen::MatrixXd N(2, 2);
  N << 1, 2, 0, 1;
  CHECK_THROWS_AS(symmetric_eigen(N), LyapunovError);
}

TEST_CASE("local certificate expressions") {
  const StochasticSystem sys = van_der_pol();
  const Linearization lin = linearize(sys);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd P = solve_stochastic_lyapunov(lin.A, lin.S, Q);
  const auto ex = local_certificate_expressions(sys, P, Q);
  const std::vector<double> origin{0.0, 0.0};
  CHECK(std::fabs(eval_point(ex.frobenius_squared, origin)) < 1e-12);
  for (const auto& m : ex.M) {
    const int d = polynomial_degree(m);
    CHECK(d >= 0);
    CHECK(d <= 2);
  }
  CHECK(polynomial_degree(ex.h) == 4);

  const StochasticSystem lin_sys = stable_linear();
  const Linearization l2 = linearize(lin_sys);
  const Eigen::MatrixXd P2 = solve_stochastic_lyapunov(l2.A, l2.S, Q);
  const auto ex2 = local_certificate_expressions(lin_sys, P2, Q);
  for (const std::vector<double> x : {std::vector<double>{0.3, -1.0}, std::vector<double>{1.7, 0.2}}) {
    for (const auto& m : ex2.M) CHECK(std::fabs(eval_point(m, x)) < 1e-12);
  }
}

TEST_CASE("local level search") {
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
  LevelSearchOptions opts;

  const StochasticSystem lin_sys = stable_linear();
  const Linearization l2 = linearize(lin_sys);
  const Eigen::MatrixXd P2 = solve_stochastic_lyapunov(l2.A, l2.S, Q);
  const double cap = ellipsoid_cap(P2, lin_sys.domain());
  CHECK(find_local_level(lin_sys, P2, Q, 0.9999, opts).level == cap);

  const StochasticSystem sys = van_der_pol();
  const Linearization lin = linearize(sys);
  const Eigen::MatrixXd P = solve_stochastic_lyapunov(lin.A, lin.S, Q);
  const LevelResult tight = find_local_level(sys, P, Q, 0.9999, opts);
  CHECK(tight.outcome.certified());
  CHECK(tight.level >= 0.25);
  CHECK(tight.level <= 0.34);
  const LevelResult loose = find_local_level(sys, P, Q, 0.5, opts);
  CHECK(loose.level <= tight.level);

  CHECK_THROWS_AS(find_local_level(sys, P, Q, 0.0, opts), std::invalid_argument);
  CHECK(default_epsilon(Q) == doctest::Approx(1e-4));
}
