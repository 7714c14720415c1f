#include "zubov/verify.hpp"

#include <chrono>
#include <deque>

#include "zubov/smt.hpp"

namespace zubov {

ExpressionFunction::ExpressionFunction(Expression e, std::size_t n) : expr_(std::move(e)), n_(n), program_(expr_) {
  if (expr_.arity() > n_) throw std::invalid_argument("expression uses more variables than the function dimension");
}

double ExpressionFunction::value(std::span<const double> x) const {
  thread_local std::vector<double> scratch;
  double out = 0.0;
  program_.eval_checked(x, std::span<double>(&out, 1), scratch);
  return out;
}

Interval ExpressionFunction::enclose(const Box& box) const {
  thread_local std::vector<Interval> scratch;
  Interval out;
  program_.eval(box.sides(), std::span<Interval>(&out, 1), scratch);
  return out;
}

std::string ExpressionFunction::smt_term(SmtContext&) const { return to_smtlib(expr_); }

BoxFunctionPtr make_function(const Expression& e, std::size_t n) { return std::make_shared<ExpressionFunction>(e, n); }

BoxFunctionPtr expression_generator(const StochasticSystem& sys, const Expression& V) {
  return make_function(generator_apply(sys, V), sys.n());
}

bool Condition::region_contains(std::span<const double> x) const {
  if (!domain.contains(x)) return false;
  for (const auto& c : region) {
    if (!c.satisfied(x)) return false;
  }
  return true;
}

const char* to_string(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Certified: return "CERTIFIED";
    case VerifyStatus::Falsified: return "FALSIFIED";
    case VerifyStatus::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

VerifyOutcome check(const Condition& cond, const VerifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  VerifyOutcome out;
  const double min_width = options.min_width_fraction * cond.domain.max_width();

  struct Item {
    Box box;
    std::size_t depth;
  };
  std::deque<Item> queue;
  queue.push_back({cond.domain, 0});
  bool decided = false;

  while (!queue.empty()) {
    if (out.boxes >= options.max_boxes) {
      out.status = VerifyStatus::Unknown;
      out.inconclusive = queue.front().box;
      out.reason = "box budget exhausted";
      decided = true;
      break;
    }
    Item item = std::move(queue.front());
    queue.pop_front();
    ++out.boxes;
    out.max_depth = std::max(out.max_depth, item.depth);
    const Box& box = item.box;

    bool discharged = false;
    try {
      for (const auto& c : cond.region) {
        const Interval e = c.fn->enclose(box);
        if (e.hi < c.lo || e.lo > c.hi) {
          discharged = true;
          break;
        }
      }
      if (!discharged) {
        const Interval t = cond.target->enclose(box);
        discharged = cond.strict ? t.hi < cond.bound : t.hi <= cond.bound;
      }
    } catch (const IntervalError&) {
      discharged = false;
    }
    if (discharged) continue;

    const std::vector<double> mid = box.midpoint();
    try {
      if (cond.region_contains(mid) && !cond.threshold_holds(cond.target->value(mid))) {
        out.status = VerifyStatus::Falsified;
        out.witness = mid;
        out.reason = "threshold violated at the witness point";
        decided = true;
        break;
      }
    } catch (const EvalError&) {
      // A point where the target is undefined refutes nothing; keep splitting.
    }

    if (box.max_width() < min_width) {
      out.status = VerifyStatus::Unknown;
      out.inconclusive = box;
      out.reason = "width floor reached without a decision";
      decided = true;
      break;
    }
    auto [left, right] = box.bisect(box.widest_dimension());
    queue.push_back({std::move(left), item.depth + 1});
    queue.push_back({std::move(right), item.depth + 1});
  }
  if (!decided) {
    out.status = VerifyStatus::Certified;
    out.reason = "every box discharged";
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace zubov
