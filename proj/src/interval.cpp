#include "zubov/interval.hpp"

#include <algorithm>
#include <cstdio>

namespace zubov {

namespace {

using rounding::down;
using rounding::up;

// glibc exp/tanh are accurate to well under two ulps; pad beyond that.
constexpr int kTranscendentalUlps = 3;

Interval widen(double lo, double hi, int ulps = 1) {
  Interval r;
  r.lo = down(lo, ulps);
  r.hi = up(hi, ulps);
  return r;
}

Interval tanh_at(double u) {
  const double t = std::tanh(u);
  Interval r = widen(t, t, kTranscendentalUlps);
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

Interval d1_at(double u) {
  const Interval t = tanh_at(u);
  Interval r = Interval(1.0) - sqr(t);
  r.lo = std::max(r.lo, 0.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

Interval d2_at(double u) {
  const Interval t = tanh_at(u);
  return Interval(-2.0) * t * (Interval(1.0) - sqr(t));
}

Interval d3_at(double u) {
  const Interval t = tanh_at(u);
  const Interval s = sqr(t);
  return Interval(-2.0) * (Interval(1.0) - s) * (Interval(1.0) - Interval(3.0) * s);
}

// tanh'' attains its extrema at u = -/+ atanh(1/sqrt 3) with values +/- 4/(3 sqrt 3).
const double kD2Critical = std::atanh(1.0 / std::sqrt(3.0));
const double kD2Extreme = 4.0 / (3.0 * std::sqrt(3.0));
// tanh''' is even with minimum -2 at 0 and maximum 2/3 at |u| = atanh(sqrt(2/3)).
const double kD3Critical = std::atanh(std::sqrt(2.0 / 3.0));

}  // namespace

Interval::Interval(double lower, double upper) : lo(lower), hi(upper) {
  if (!(lo <= hi)) throw IntervalError("interval lower bound exceeds upper bound");
}

Interval operator+(Interval a, Interval b) { return widen(a.lo + b.lo, a.hi + b.hi); }

Interval operator-(Interval a, Interval b) { return widen(a.lo - b.hi, a.hi - b.lo); }

Interval operator-(Interval a) {
  Interval r;
  r.lo = -a.hi;
  r.hi = -a.lo;
  return r;
}

Interval& operator+=(Interval& a, Interval b) {
  a = a + b;
  return a;
}

Interval operator*(Interval a, Interval b) {
  const double p1 = a.lo * b.lo;
  const double p2 = a.lo * b.hi;
  const double p3 = a.hi * b.lo;
  const double p4 = a.hi * b.hi;
  return widen(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

Interval operator*(double a, Interval b) {
  if (a >= 0.0) return widen(a * b.lo, a * b.hi);
  return widen(a * b.hi, a * b.lo);
}

Interval operator/(Interval a, Interval b) {
  if (b.contains_zero()) throw IntervalError("interval division by an interval containing zero");
  const double q1 = a.lo / b.lo;
  const double q2 = a.lo / b.hi;
  const double q3 = a.hi / b.lo;
  const double q4 = a.hi / b.hi;
  return widen(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}));
}

Interval sqr(Interval a) {
  if (a.lo >= 0.0) return widen(a.lo * a.lo, a.hi * a.hi);
  if (a.hi <= 0.0) return widen(a.hi * a.hi, a.lo * a.lo);
  const double m = std::max(a.lo * a.lo, a.hi * a.hi);
  Interval r;
  r.lo = 0.0;
  r.hi = up(m);
  return r;
}

Interval pow(Interval a, int k) {
  if (k < 0) throw IntervalError("negative integer exponent");
  if (k == 0) return Interval(1.0);
  if (k == 1) return a;
  if (k == 2) return sqr(a);
  const double pl = std::pow(a.lo, k);
  const double ph = std::pow(a.hi, k);
  if (k % 2 == 1) return widen(pl, ph, 2);
  Interval r;
  if (a.lo >= 0.0) {
    r = widen(pl, ph, 2);
  } else if (a.hi <= 0.0) {
    r = widen(ph, pl, 2);
  } else {
    r.lo = 0.0;
    r.hi = up(std::max(pl, ph), 2);
  }
  r.lo = std::max(r.lo, 0.0);
  return r;
}

Interval exp(Interval a) {
  Interval r = widen(std::exp(a.lo), std::exp(a.hi), kTranscendentalUlps);
  r.lo = std::max(r.lo, 0.0);
  return r;
}

Interval tanh(Interval a) {
  Interval r;
  r.lo = tanh_at(a.lo).lo;
  r.hi = tanh_at(a.hi).hi;
  return r;
}

Interval tanh_d1(Interval a) {
  // sech^2 is even and decreasing in |u|.
  Interval r = hull(d1_at(a.lo), d1_at(a.hi));
  if (a.contains_zero()) r.hi = 1.0;
  return r;
}

Interval tanh_d2(Interval a) {
  Interval r = hull(d2_at(a.lo), d2_at(a.hi));
  if (a.contains(-kD2Critical)) r.hi = std::max(r.hi, up(kD2Extreme, 2));
  if (a.contains(kD2Critical)) r.lo = std::min(r.lo, down(-kD2Extreme, 2));
  return r;
}

Interval tanh_d3(Interval a) {
  Interval r = hull(d3_at(a.lo), d3_at(a.hi));
  if (a.contains_zero()) r.lo = std::min(r.lo, down(-2.0));
  if (a.contains(kD3Critical) || a.contains(-kD3Critical)) r.hi = std::max(r.hi, up(2.0 / 3.0, 2));
  return r;
}

Interval hull(Interval a, Interval b) {
  Interval r;
  r.lo = std::min(a.lo, b.lo);
  r.hi = std::max(a.hi, b.hi);
  return r;
}

bool intersects(Interval a, Interval b) { return a.lo <= b.hi && b.lo <= a.hi; }

Box::Box(std::vector<Interval> sides) : sides_(std::move(sides)) {
  if (sides_.empty()) throw IntervalError("box must have at least one dimension");
}

Box::Box(std::span<const double> lower, std::span<const double> upper) {
  if (lower.size() != upper.size() || lower.empty()) throw IntervalError("box bounds have mismatched or zero length");
  sides_.reserve(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i) sides_.emplace_back(lower[i], upper[i]);
}

std::size_t Box::widest_dimension() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sides_.size(); ++i) {
    if (sides_[i].width() > sides_[best].width()) best = i;
  }
  return best;
}

double Box::max_width() const { return sides_[widest_dimension()].width(); }

std::vector<double> Box::midpoint() const {
  std::vector<double> m(sides_.size());
  for (std::size_t i = 0; i < sides_.size(); ++i) m[i] = sides_[i].mid();
  return m;
}

std::pair<Box, Box> Box::bisect(std::size_t dimension) const {
  Box left = *this;
  Box right = *this;
  const double m = sides_[dimension].mid();
  left.sides_[dimension].hi = m;
  right.sides_[dimension].lo = m;
  return {std::move(left), std::move(right)};
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != sides_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!sides_[i].contains(x[i])) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  if (other.dim() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (other[i].lo < sides_[i].lo || other[i].hi > sides_[i].hi) return false;
  }
  return true;
}

double Box::radius() const {
  double s = 0.0;
  for (const auto& side : sides_) s += side.mag() * side.mag();
  return std::sqrt(s);
}

std::string to_string(Interval a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", a.lo, a.hi);
  return buf;
}

}  // namespace zubov
