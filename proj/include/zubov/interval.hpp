#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace zubov {

class IntervalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Closed interval [lo, hi]. Every arithmetic primitive rounds its endpoints
/// outward by at least one ulp, so results enclose the exact real image.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr explicit Interval(double point) : lo(point), hi(point) {}
  Interval(double lower, double upper);

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

namespace rounding {
inline double down(double x, int ulps = 1) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, -std::numeric_limits<double>::infinity());
  return x;
}
inline double up(double x, int ulps = 1) {
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, std::numeric_limits<double>::infinity());
  return x;
}
}  // namespace rounding

Interval operator+(Interval a, Interval b);
Interval operator-(Interval a, Interval b);
Interval operator-(Interval a);
Interval operator*(Interval a, Interval b);
Interval operator*(double a, Interval b);
/// Throws IntervalError when the divisor contains zero.
Interval operator/(Interval a, Interval b);
Interval& operator+=(Interval& a, Interval b);

Interval pow(Interval a, int k);
Interval sqr(Interval a);
Interval exp(Interval a);
Interval tanh(Interval a);
/// Ranges of tanh', tanh'' and tanh''' over an argument interval, computed
/// from the location of their critical points rather than by composing
/// enclosures of tanh.
Interval tanh_d1(Interval a);
Interval tanh_d2(Interval a);
Interval tanh_d3(Interval a);

Interval hull(Interval a, Interval b);
bool intersects(Interval a, Interval b);

/// Axis-aligned box, one interval per state dimension.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> sides);
  Box(std::span<const double> lower, std::span<const double> upper);

  std::size_t dim() const { return sides_.size(); }
  const Interval& operator[](std::size_t i) const { return sides_[i]; }
  Interval& operator[](std::size_t i) { return sides_[i]; }
  std::span<const Interval> sides() const { return sides_; }

  std::size_t widest_dimension() const;
  double max_width() const;
  std::vector<double> midpoint() const;
  std::pair<Box, Box> bisect(std::size_t dimension) const;
  bool contains(std::span<const double> x) const;
  bool contains(const Box& other) const;
  /// Largest Euclidean norm over the box's corners.
  double radius() const;

 private:
  std::vector<Interval> sides_;
};

std::string to_string(Interval a);

}  // namespace zubov
