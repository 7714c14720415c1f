#include <doctest.h>

#include <cmath>
#include <random>

#include "zubov/interval.hpp"

using namespace zubov;

namespace {

Interval random_interval(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  double a = d(rng);
  double b = d(rng);
  if (a > b) std::swap(a, b);
  return Interval(a, b);
}

double sample(std::mt19937_64& rng, Interval a) {
  return std::uniform_real_distribution<double>(a.lo, a.hi)(rng);
}

}  // namespace

TEST_CASE("arithmetic encloses point results") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20000; ++trial) {
    const Interval a = random_interval(rng, 4.0);
    const Interval b = random_interval(rng, 4.0);
    const double x = sample(rng, a);
    const double y = sample(rng, b);
    CHECK((a + b).contains(x + y));
    CHECK((a - b).contains(x - y));
    CHECK((a * b).contains(x * y));
    CHECK(sqr(a).contains(x * x));
    CHECK(pow(a, 3).contains(x * x * x));
    CHECK(exp(a).contains(std::exp(x)));
    CHECK(tanh(a).contains(std::tanh(x)));
    if (!b.contains_zero()) CHECK((a / b).contains(x / y));
  }
}

TEST_CASE("tanh derivative ranges are exact at the critical points") {
  const double c2 = std::atanh(1.0 / std::sqrt(3.0));
  const Interval d2 = tanh_d2(Interval(-3.0, 3.0));
  CHECK(d2.hi == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(d2.lo == doctest::Approx(-4.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(tanh_d3(Interval(-3.0, 3.0)).lo == doctest::Approx(-2.0));
  CHECK(tanh_d3(Interval(-3.0, 3.0)).hi == doctest::Approx(2.0 / 3.0));
  CHECK(tanh_d1(Interval(-0.5, 0.5)).hi == 1.0);
  // Monotone stretch away from critical points: endpoints decide.
  const Interval d = tanh_d2(Interval(c2 + 0.1, c2 + 0.5));
  CHECK(d.hi < 0.0);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20000; ++trial) {
    const Interval a = random_interval(rng, 5.0);
    const double u = sample(rng, a);
    const double t = std::tanh(u);
    const double s1 = 1.0 - t * t;
    CHECK(tanh_d1(a).contains(s1));
    CHECK(tanh_d2(a).contains(-2.0 * t * s1));
    CHECK(tanh_d3(a).contains(-2.0 * s1 * s1 + 4.0 * t * t * s1));
  }
}

TEST_CASE("division by an interval containing zero throws") {
  CHECK_THROWS_AS(Interval(1.0, 2.0) / Interval(-1.0, 1.0), IntervalError);
  CHECK_THROWS_AS(Interval(2.0, 1.0), IntervalError);
}

TEST_CASE("outward rounding widens by at least one ulp") {
  const Interval s = Interval(0.1) + Interval(0.2);
  CHECK(s.lo < 0.1 + 0.2);
  CHECK(s.hi > 0.1 + 0.2);
  CHECK(s.contains(0.3));
}

TEST_CASE("even powers of intervals straddling zero start at zero") {
  const Interval p = pow(Interval(-1.0, 2.0), 2);
  CHECK(p.lo == 0.0);
  CHECK(p.hi >= 4.0);
  CHECK(sqr(Interval(-3.0, 1.0)).lo == 0.0);
}

TEST_CASE("box bisection and geometry") {
  const std::vector<double> lo{-2.5, -3.5};
  const std::vector<double> hi{2.5, 3.5};
  const Box box(lo, hi);
  CHECK(box.widest_dimension() == 1);
  CHECK(box.max_width() == 7.0);
  auto [l, r] = box.bisect(1);
  CHECK(l[1].hi == 0.0);
  CHECK(r[1].lo == 0.0);
  CHECK(box.contains(l));
  CHECK(box.radius() == doctest::Approx(std::sqrt(2.5 * 2.5 + 3.5 * 3.5)));
  const std::vector<double> inside{0.0, 3.5};
  const std::vector<double> outside{0.0, 3.6};
  CHECK(box.contains(inside));
  CHECK_FALSE(box.contains(outside));
}
