#include "zubov/system.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>

namespace zubov {

namespace {

bool inside_cube(const Box& b, double radius) {
  for (const auto& s : b.sides()) {
    if (s.lo < -radius || s.hi > radius) return false;
  }
  return true;
}

// Certifies g > 0 on the part of the domain outside the cube |x|_inf < radius.
bool weight_positive_on_annulus(const Program& g, const Box& domain, double radius) {
  std::vector<Box> stack{domain};
  std::vector<Interval> scratch;
  const double floor_width = radius / 64.0;
  std::size_t processed = 0;
  while (!stack.empty()) {
    Box b = std::move(stack.back());
    stack.pop_back();
    if (inside_cube(b, radius)) continue;
    if (++processed > 2'000'000) return false;
    Interval v;
    g.eval(b.sides(), std::span<Interval>(&v, 1), scratch);
    if (v.lo > 0.0) continue;
    if (b.max_width() < floor_width) return false;
    auto [left, right] = b.bisect(b.widest_dimension());
    stack.push_back(std::move(left));
    stack.push_back(std::move(right));
  }
  return true;
}

}  // namespace

StochasticSystem::StochasticSystem(std::vector<Expression> drift, std::vector<Expression> diffusion,
                                   std::size_t noise_dim, Expression weight, Box domain, double positivity_radius)
    : drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      noise_dim_(noise_dim),
      weight_(std::move(weight)),
      domain_(std::move(domain)),
      positivity_radius_(positivity_radius) {
  const std::size_t dim = drift_.size();
  if (dim == 0) throw SystemError("state dimension must be positive");
  if (noise_dim_ == 0) throw SystemError("noise dimension must be positive");
  if (diffusion_.size() != dim * noise_dim_) throw SystemError("diffusion must have n*m entries");
  if (domain_.dim() != dim) throw SystemError("domain dimension does not match the state dimension");
  const std::vector<double> origin(dim, 0.0);
  if (!domain_.contains(origin)) throw SystemError("domain must contain the origin");

  auto check_arity = [&](const Expression& e, const std::string& what) {
    if (e.arity() > dim) throw SystemError(what + " references a variable beyond x" + std::to_string(dim));
  };
  for (std::size_t i = 0; i < dim; ++i) {
    check_arity(drift_[i], "drift");
    if (eval_point(drift_[i], origin) != 0.0) throw SystemError("f(0) must be 0 (component " + std::to_string(i + 1) + ")");
  }
  for (std::size_t i = 0; i < diffusion_.size(); ++i) {
    check_arity(diffusion_[i], "diffusion");
    if (eval_point(diffusion_[i], origin) != 0.0) throw SystemError("sigma(0) must be 0");
    if (!diffusion_[i].is_constant(0.0)) deterministic_ = false;
  }
  check_arity(weight_, "weight");
  if (eval_point(weight_, origin) != 0.0) throw SystemError("g(0) must be 0");

  // Positive definiteness of g: random samples plus a certified lower bound away from 0.
  if (!(positivity_radius_ > 0.0)) throw SystemError("positivity radius must be positive");
  for (const auto& s : domain_.sides()) {
    if (std::min(-s.lo, s.hi) <= positivity_radius_) throw SystemError("positivity radius must be inside the domain");
  }
  const Program g(weight_);
  std::mt19937_64 rng(0x5eed);
  std::vector<double> x(dim);
  for (int trial = 0; trial < 256; ++trial) {
    for (std::size_t i = 0; i < dim; ++i) {
      std::uniform_real_distribution<double> u(domain_[i].lo, domain_[i].hi);
      x[i] = u(rng);
    }
    bool is_origin = true;
    for (double v : x) is_origin = is_origin && v == 0.0;
    if (!is_origin && !(g.eval1(x) > 0.0)) throw SystemError("g is not positive away from the origin");
  }
  if (!weight_positive_on_annulus(g, domain_, positivity_radius_)) {
    throw SystemError("could not certify g > 0 on the domain outside the positivity radius");
  }

  outer_.resize(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      std::vector<Expression> terms;
      for (std::size_t k = 0; k < noise_dim_; ++k) {
        terms.push_back(diffusion_[i * noise_dim_ + k] * diffusion_[j * noise_dim_ + k]);
      }
      outer_[i * dim + j] = sum(terms);
      outer_[j * dim + i] = outer_[i * dim + j];
    }
  }

  std::vector<Expression> packed = drift_;
  packed.insert(packed.end(), diffusion_.begin(), diffusion_.end());
  packed.push_back(weight_);
  dynamics_ = Program(packed);

  std::vector<Expression> gen = drift_;
  gen.insert(gen.end(), outer_.begin(), outer_.end());
  gen.push_back(weight_);
  generator_ = Program(gen);
}

StochasticSystem StochasticSystem::without_noise() const {
  return StochasticSystem(drift_, std::vector<Expression>(diffusion_.size(), Expression::constant(0.0)), noise_dim_,
                          weight_, domain_, positivity_radius_);
}

Linearization linearize(const StochasticSystem& sys) {
  const std::size_t n = sys.n();
  const std::vector<double> origin(n, 0.0);
  Linearization lin;
  lin.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lin.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          eval_point(differentiate(sys.drift(i), j), origin);
    }
  }
  for (std::size_t k = 0; k < sys.m(); ++k) {
    Eigen::MatrixXd S(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            eval_point(differentiate(sys.diffusion(i, k), j), origin);
      }
    }
    lin.S.push_back(std::move(S));
  }
  return lin;
}

Expression generator_apply(const StochasticSystem& sys, const Expression& V) {
  const std::size_t n = sys.n();
  std::vector<Expression> grad(n);
  std::vector<Expression> terms;
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = differentiate(V, i);
    terms.push_back(grad[i] * sys.drift(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const Expression& d = sys.diffusion_outer(i, j);
      if (d.is_constant(0.0)) continue;
      const Expression second = differentiate(grad[i], j);
      // Off-diagonal pairs appear twice in the full trace.
      const double coeff = i == j ? 0.5 : 1.0;
      terms.push_back(coeff * (d * second));
    }
  }
  return sum(terms);
}

SecondOrderFunction expression_jet(const Expression& V, std::size_t n) {
  std::vector<Expression> parts{V};
  for (std::size_t i = 0; i < n; ++i) parts.push_back(differentiate(V, i));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) parts.push_back(differentiate(parts[1 + i], j));
  }
  auto program = std::make_shared<const Program>(parts);
  return [program, n](std::span<const double> x) {
    std::vector<double> out(1 + n + n * n);
    std::vector<double> scratch;
    program->eval(x, out, scratch);
    Jet2 jet;
    jet.value = out[0];
    jet.gradient = Eigen::Map<const Eigen::VectorXd>(out.data() + 1, static_cast<Eigen::Index>(n));
    jet.hessian = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out.data() + 1 + n, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    return jet;
  };
}

namespace {

// LV from the jet and a packed evaluation of (f, sigma sigma^T, g).
double generator_from_packed(std::size_t n, const Jet2& jet, std::span<const double> packed) {
  double lv = 0.0;
  for (std::size_t i = 0; i < n; ++i) lv += jet.gradient(static_cast<Eigen::Index>(i)) * packed[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lv += 0.5 * packed[n + i * n + j] * jet.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return lv;
}

}  // namespace

double generator_at(const StochasticSystem& sys, const Jet2& jet, std::span<const double> x) {
  const std::size_t n = sys.n();
  std::vector<double> packed(n + n * n + 1);
  std::vector<double> scratch;
  sys.generator_program().eval(x, packed, scratch);
  return generator_from_packed(n, jet, packed);
}

ScalarField zubov_residual(const StochasticSystem& sys, SecondOrderFunction W) {
  // `sys` must outlive the returned callable.
  return [&sys, W = std::move(W)](std::span<const double> x) {
    const std::size_t n = sys.n();
    const Jet2 jet = W(x);
    std::vector<double> packed(n + n * n + 1);
    std::vector<double> scratch;
    sys.generator_program().eval(x, packed, scratch);
    return generator_from_packed(n, jet, packed) + packed.back() * (1.0 - jet.value);
  };
}

Expression default_weight(std::size_t n) {
  std::vector<Expression> squares;
  for (std::size_t i = 0; i < n; ++i) squares.push_back(pow(Expression::variable(i), 2));
  return 0.1 * sum(squares);
}

}  // namespace zubov
