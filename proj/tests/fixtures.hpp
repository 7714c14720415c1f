#pragma once

// Systems shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "zubov/expr.hpp"
#include "zubov/interval.hpp"
#include "zubov/system.hpp"
#include "zubov/verify.hpp"

namespace zubov::testing {

inline Box box1(double lo, double hi) { return Box(std::vector<Interval>{Interval(lo, hi)}); }

inline Box box2(double a, double b, double c, double d) {
  return Box(std::vector<Interval>{Interval(a, b), Interval(c, d)});
}

/// Reversed Van der Pol oscillator with multiplicative noise 0.5 x_i on each
/// coordinate, the weight 0.1 |x|^2 and the domain used throughout.
inline StochasticSystem van_der_pol(double alpha = 0.5, double beta = 0.5) {
  const Expression x1 = Expression::variable(0);
  const Expression x2 = Expression::variable(1);
  return StochasticSystem({parse("-x2", 2), parse("x1 - (1 - x1^2)*x2", 2)},
                          {alpha * x1, Expression::constant(0.0), Expression::constant(0.0), beta * x2}, 2,
                          default_weight(2), box2(-2.5, 2.5, -3.5, 3.5));
}

/// dX = -X dt with g = 0.1 x^2 on [-2, 2].
inline StochasticSystem one_d_oracle() {
  return StochasticSystem({parse("-x1", 1)}, {Expression::constant(0.0)}, 1, default_weight(1), box1(-2.0, 2.0));
}

/// dX = A X dt with A = [[-1, 0.5], [0, -1]], no noise.
inline StochasticSystem stable_linear() {
  return StochasticSystem({parse("-x1 + 0.5*x2", 2), parse("-x2", 2)}, {Expression::constant(0.0), Expression::constant(0.0)},
                          1, default_weight(2), box2(-2, 2, -2, 2));
}

/// Random expression tree over x1..xn using every supported operation.
inline Expression random_expression(std::mt19937_64& rng, std::size_t n, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  switch (pick(rng)) {
    case 0: return Expression::constant(std::round(c(rng) * 100.0) / 100.0);
    case 1: return Expression::variable(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    case 2: return random_expression(rng, n, depth - 1) + random_expression(rng, n, depth - 1);
    case 3: return random_expression(rng, n, depth - 1) - random_expression(rng, n, depth - 1);
    case 4: return random_expression(rng, n, depth - 1) * random_expression(rng, n, depth - 1);
    case 5: return pow(random_expression(rng, n, depth - 1), std::uniform_int_distribution<int>(2, 3)(rng));
    case 6: return tanh(random_expression(rng, n, depth - 1));
    case 7: return exp(0.3 * random_expression(rng, n, depth - 1));
    default: return -random_expression(rng, n, depth - 1);
  }
}

/// Rejection-samples `count` points of the condition's region and returns
/// how many violate the threshold pointwise (count + 1 when the region is too
/// thin to collect `count` points). `tried` receives the number of draws.
inline std::size_t count_violations(const Condition& cond, std::size_t count, std::uint64_t seed,
                                    std::size_t* tried = nullptr, std::size_t max_tries = 50'000'000) {
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> side;
  for (const Interval& s : cond.domain.sides()) side.emplace_back(s.lo, s.hi);
  std::vector<double> x(cond.domain.dim());
  std::size_t accepted = 0;
  std::size_t bad = 0;
  std::size_t draws = 0;
  while (accepted < count && draws < max_tries) {
    ++draws;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = side[i](rng);
    if (!cond.region_contains(x)) continue;
    ++accepted;
    if (!cond.threshold_holds(cond.target->value(x))) ++bad;
  }
  if (tried) *tried = draws;
  return accepted < count ? count + 1 : bad;
}

}  // namespace zubov::testing

using namespace zubov::testing;
