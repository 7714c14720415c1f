#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#include "zubov/linlyap.hpp"
#include "zubov/smt.hpp"
#include "zubov/verify.hpp"

namespace zubov {

namespace {

class NegatedFunction final : public BoxFunction {
 public:
  explicit NegatedFunction(BoxFunctionPtr inner) : inner_(std::move(inner)) {}
  std::size_t dim() const override { return inner_->dim(); }
  double value(std::span<const double> x) const override { return -inner_->value(x); }
  Interval enclose(const Box& box) const override { return -inner_->enclose(box); }
  std::string smt_term(SmtContext& ctx) const override { return "(- " + inner_->smt_term(ctx) + ")"; }

 private:
  BoxFunctionPtr inner_;
};

using Predicate = std::function<VerifyOutcome(double)>;

// Largest passing level in (floor, cap] for a predicate that passes below
// some threshold: halve the distance to `floor` until a probe passes, then bisect.
LevelResult largest_passing(const Predicate& pred, double floor, double cap, const LevelSearchOptions& opts,
                            const std::string& what) {
  LevelResult res;
  auto probe = [&](double c) {
    VerifyOutcome o = pred(c);
    res.probes.push_back({c, o.status});
    return o;
  };
  VerifyOutcome last = probe(cap);
  if (last.certified()) {
    res.level = cap;
    res.outcome = std::move(last);
    return res;
  }
  const double tol = opts.relative_tolerance;
  const double smallest = std::max(floor, cap * opts.probe_floor_fraction);
  double fail = cap;
  double pass = 0.0;
  bool found = false;
  for (double c = floor + 0.5 * (cap - floor); c > smallest && (c - floor) > tol * c; c = floor + 0.5 * (c - floor)) {
    VerifyOutcome o = probe(c);
    if (o.certified()) {
      pass = c;
      res.outcome = std::move(o);
      found = true;
      break;
    }
    fail = c;
    last = std::move(o);
  }
  if (!found) throw LevelSearchError(what + ": no probe level could be certified", last);
  while (fail - pass > tol * pass) {
    const double mid = 0.5 * (pass + fail);
    VerifyOutcome o = probe(mid);
    if (o.certified()) {
      pass = mid;
      res.outcome = std::move(o);
    } else {
      fail = mid;
    }
  }
  res.level = pass;
  return res;
}

}  // namespace

VerifyOutcome check_level_inside_domain(const BoxFunctionPtr& fn, double level, const Box& domain,
                                        const VerifyOptions& options) {
  auto negated = std::make_shared<NegatedFunction>(fn);
  VerifyOutcome total;
  total.status = VerifyStatus::Certified;
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    for (double face : {domain[i].lo, domain[i].hi}) {
      Box f = domain;
      f[i] = Interval(face);
      Condition cond;
      cond.target = negated;
      cond.bound = -level;
      cond.strict = true;
      cond.domain = f;
      cond.description = "level function exceeds the level on a domain face";
      VerifyOutcome o = check(cond, options);
      total.boxes += o.boxes;
      total.seconds += o.seconds;
      total.max_depth = std::max(total.max_depth, o.max_depth);
      if (!o.certified()) {
        o.boxes = total.boxes;
        o.reason = "sublevel set reaches the domain boundary: " + o.reason;
        return o;
      }
    }
  }
  total.reason = "sublevel set stays inside the domain";
  return total;
}

LevelResult find_largest_level(const BoxFunctionPtr& fn, const BoxFunctionPtr& generator, std::optional<double> lower,
                               double bound, double cap, const Box& domain, const LevelSearchOptions& options) {
  if (lower && *lower >= cap) throw std::invalid_argument("lower level must be below the cap");
  auto pred = [&](double c) {
    VerifyOutcome inside = check_level_inside_domain(fn, c, domain, options.verify);
    if (!inside.certified()) return inside;
    Condition cond;
    cond.target = generator;
    cond.region.push_back({fn, lower.value_or(-std::numeric_limits<double>::infinity()), c});
    cond.bound = bound;
    cond.domain = domain;
    VerifyOutcome o = check(cond, options.verify);
    o.boxes += inside.boxes;
    return o;
  };
  return largest_passing(pred, lower.value_or(0.0), cap, options, "find_largest_level");
}

LevelResult find_smallest_lower_level(const BoxFunctionPtr& fn, const BoxFunctionPtr& generator, double upper,
                                      double bound, const Box& domain, const LevelSearchOptions& options,
                                      std::optional<double> known_pass) {
  LevelResult res;
  auto probe = [&](double b) {
    Condition cond;
    cond.target = generator;
    cond.region.push_back({fn, b, upper});
    cond.bound = bound;
    cond.domain = domain;
    VerifyOutcome o = check(cond, options.verify);
    res.probes.push_back({b, o.status});
    return o;
  };
  const double tol = options.relative_tolerance;
  double pass = known_pass.value_or(upper / (1.0 + tol));
  if (pass >= upper) throw std::invalid_argument("starting lower level must be below the upper level");
  VerifyOutcome first = probe(pass);
  if (!first.certified()) throw LevelSearchError("find_smallest_lower_level: no probe level could be certified", first);
  res.outcome = std::move(first);

  const double floor = upper * options.probe_floor_fraction;
  double fail = 0.0;
  bool failed = false;
  for (double b = pass * 0.5;; b *= 0.5) {
    const bool at_floor = b <= floor;
    if (at_floor) b = floor;
    VerifyOutcome o = probe(b);
    if (o.certified()) {
      pass = b;
      res.outcome = std::move(o);
      if (at_floor) break;
    } else {
      fail = b;
      failed = true;
      break;
    }
  }
  if (failed) {
    while (pass - fail > tol * pass) {
      const double mid = 0.5 * (pass + fail);
      VerifyOutcome o = probe(mid);
      if (o.certified()) {
        pass = mid;
        res.outcome = std::move(o);
      } else {
        fail = mid;
      }
    }
  }
  res.level = pass;
  return res;
}

VerifyOutcome check_inclusion(const BoxFunctionPtr& inner, double a, const BoxFunctionPtr& outer, double b,
                              const Box& domain, const VerifyOptions& options) {
  Condition cond;
  cond.target = outer;
  cond.region.push_back({inner, -std::numeric_limits<double>::infinity(), a});
  cond.bound = b;
  cond.domain = domain;
  cond.description = "sublevel inclusion";
  return check(cond, options);
}

MaximizeResult maximize(const BoxFunctionPtr& target, const std::vector<RangeConstraint>& region, const Box& domain,
                        const VerifyOptions& options, double relative_gap) {
  struct Node {
    double hi;
    Box box;
    bool operator<(const Node& o) const { return hi < o.hi; }
  };
  MaximizeResult res;
  const double min_width = options.min_width_fraction * domain.max_width();
  std::priority_queue<Node> heap;

  auto consider = [&](Box b) {
    ++res.boxes;
    for (const auto& c : region) {
      const Interval e = c.fn->enclose(b);
      if (e.hi < c.lo || e.lo > c.hi) return;
    }
    const Interval t = target->enclose(b);
    if (t.hi <= res.attained) return;
    const std::vector<double> mid = b.midpoint();
    bool feasible = true;
    for (const auto& c : region) feasible = feasible && c.satisfied(mid);
    if (feasible) res.attained = std::max(res.attained, target->value(mid));
    heap.push({t.hi, std::move(b)});
  };

  consider(domain);
  while (!heap.empty()) {
    const Node& top = heap.top();
    res.upper = std::max(top.hi, res.attained);
    const double gap = res.upper - res.attained;
    if (gap <= relative_gap * std::max(std::fabs(res.upper), 1e-12)) return res;
    if (top.box.max_width() < min_width || res.boxes >= options.max_boxes) return res;
    Box b = top.box;
    heap.pop();
    auto [left, right] = b.bisect(b.widest_dimension());
    consider(std::move(left));
    consider(std::move(right));
  }
  // Heap drained: every remaining box was infeasible or could not beat `attained`.
  if (std::isfinite(res.attained)) {
    res.upper = res.attained;
  } else {
    res.region_empty = true;
    res.upper = -std::numeric_limits<double>::infinity();
  }
  return res;
}

C1Result find_smallest_c1(const BoxFunctionPtr& V, const BoxFunctionPtr& W, double beta1, const Box& domain,
                          const VerifyOptions& options) {
  C1Result res;
  res.search = maximize(V, {{W, -std::numeric_limits<double>::infinity(), beta1}}, domain, options);
  if (res.search.region_empty) throw std::invalid_argument("sublevel set {W <= beta1} is empty on the domain");
  res.c1 = res.search.upper;
  res.inclusion = check_inclusion(W, beta1, V, res.c1, domain, options);
  return res;
}

double default_zeta(const BoxFunctionPtr& generator, const Box& domain) {
  std::vector<Box> boxes{domain};
  for (int level = 0; level < 8; ++level) {
    std::vector<Box> next;
    for (const auto& b : boxes) {
      auto [l, r] = b.bisect(b.widest_dimension());
      next.push_back(std::move(l));
      next.push_back(std::move(r));
    }
    boxes = std::move(next);
  }
  double m = 0.0;
  for (const auto& b : boxes) m = std::max(m, generator->enclose(b).mag());
  return std::max(1e-6, 1e-4 * m);
}

LevelResult find_local_level(const StochasticSystem& sys, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                             double r, const LevelSearchOptions& options, std::optional<double> cap) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  const auto exprs = local_certificate_expressions(sys, P, Q);
  const auto V = make_function(exprs.V, sys.n());
  const auto frob = make_function(exprs.frobenius_squared, sys.n());
  const double limit = 4.0 * r * r;
  const double top = cap.value_or(ellipsoid_cap(P, sys.domain()));
  auto pred = [&](double c) {
    Condition cond;
    cond.target = frob;
    cond.region.push_back({V, -std::numeric_limits<double>::infinity(), c});
    cond.bound = limit;
    cond.domain = sys.domain();
    cond.description = "local condition ||M(x)||_F^2 <= 4 r^2 on {x^T P x <= c}";
    return check(cond, options.verify);
  };
  return largest_passing(pred, 0.0, top, options, "find_local_level");
}

}  // namespace zubov
