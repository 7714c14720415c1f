#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "zubov/expr.hpp"
#include "zubov/interval.hpp"
#include "zubov/program.hpp"

namespace zubov {

class SystemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// dX = f(X) dt + sigma(X) dB with an m-dimensional Brownian motion, the
/// Zubov weight g and the compact box the system is trained and verified on.
class StochasticSystem {
 public:
  /// `diffusion` is row-major n x m. Throws SystemError unless f(0) = 0,
  /// sigma(0) = 0, g(0) = 0 and g is certified positive on
  /// {positivity_radius <= |x|_inf} within the domain.
  StochasticSystem(std::vector<Expression> drift, std::vector<Expression> diffusion, std::size_t noise_dim,
                   Expression weight, Box domain, double positivity_radius = 1e-2);

  std::size_t n() const { return drift_.size(); }
  std::size_t m() const { return noise_dim_; }
  const Expression& drift(std::size_t i) const { return drift_[i]; }
  const Expression& diffusion(std::size_t i, std::size_t k) const { return diffusion_[i * noise_dim_ + k]; }
  /// [sigma sigma^T]_ij, expanded once at construction.
  const Expression& diffusion_outer(std::size_t i, std::size_t j) const { return outer_[i * n() + j]; }
  const Expression& weight() const { return weight_; }
  const Box& domain() const { return domain_; }
  bool deterministic() const { return deterministic_; }

  /// Drift (n), diffusion (n*m, row-major) and weight (1) packed into `out`.
  void dynamics(std::span<const double> x, std::span<double> out, std::vector<double>& scratch) const {
    dynamics_.eval(x, out, scratch);
  }
  const Program& dynamics_program() const { return dynamics_; }
  /// Drift (n), sigma sigma^T (n*n, row-major) and weight (1).
  const Program& generator_program() const { return generator_; }

  /// Same drift and domain with the diffusion removed.
  StochasticSystem without_noise() const;

 private:
  std::vector<Expression> drift_;
  std::vector<Expression> diffusion_;
  std::size_t noise_dim_;
  Expression weight_;
  Box domain_;
  std::vector<Expression> outer_;
  bool deterministic_ = true;
  double positivity_radius_;
  Program dynamics_;
  Program generator_;
};

/// A = Df(0) and S_k = D sigma_k(0), sigma_k the k-th column of sigma.
struct Linearization {
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> S;
};

Linearization linearize(const StochasticSystem& sys);

/// LV = sum_i V_xi f_i + 1/2 sum_ij [sigma sigma^T]_ij V_xixj, symbolically.
Expression generator_apply(const StochasticSystem& sys, const Expression& V);

/// Value, gradient and Hessian of a scalar function at one point.
struct Jet2 {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

using SecondOrderFunction = std::function<Jet2(std::span<const double>)>;
using ScalarField = std::function<double(std::span<const double>)>;

/// Second-order jet of an expression via symbolic differentiation.
SecondOrderFunction expression_jet(const Expression& V, std::size_t n);

/// LV at x given the jet of V at x.
double generator_at(const StochasticSystem& sys, const Jet2& jet, std::span<const double> x);

/// x -> LW(x) + g(x) (1 - W(x)), the pointwise stochastic Zubov residual.
ScalarField zubov_residual(const StochasticSystem& sys, SecondOrderFunction W);

/// 0.1 * (x1^2 + ... + xn^2)
Expression default_weight(std::size_t n);

}  // namespace zubov
