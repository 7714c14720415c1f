#include "zubov/smt.hpp"

#include <cmath>
#include <sstream>

namespace zubov {

std::string SmtContext::define(const std::string& hint, const std::string& term) {
  std::string name = hint + "_" + std::to_string(counter_++);
  definitions_.push_back("(define-fun " + name + " () Real " + term + ")");
  return name;
}

std::string export_smt(const Condition& cond) {
  const std::size_t n = cond.domain.dim();
  SmtContext ctx(n);
  std::vector<std::string> region_asserts;
  for (const auto& c : cond.region) {
    const std::string term = c.fn->smt_term(ctx);
    if (std::isfinite(c.lo)) region_asserts.push_back("(assert (<= " + smt_decimal(c.lo) + " " + term + "))");
    if (std::isfinite(c.hi)) region_asserts.push_back("(assert (<= " + term + " " + smt_decimal(c.hi) + "))");
  }
  const std::string target = cond.target->smt_term(ctx);

  std::ostringstream out;
  out << "; " << (cond.description.empty() ? "verification condition" : cond.description) << "\n";
  out << "; Claim: for every x in the domain box satisfying the region constraints,\n";
  out << ";        target(x) " << (cond.strict ? "<" : "<=") << " " << smt_decimal(cond.bound) << ".\n";
  out << "; The script asserts the negation of the claim; the expected answer is unsat.\n";
  out << "; Uses exp/tanh where present: needs a solver with transcendental support (e.g. dReal).\n";
  out << "(set-logic QF_NRA)\n";
  for (std::size_t i = 0; i < n; ++i) out << "(declare-fun x" << i + 1 << " () Real)\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "(assert (<= " << smt_decimal(cond.domain[i].lo) << " x" << i + 1 << "))\n";
    out << "(assert (<= x" << i + 1 << " " << smt_decimal(cond.domain[i].hi) << "))\n";
  }
  for (const auto& d : ctx.definitions()) out << d << "\n";
  for (const auto& a : region_asserts) out << a << "\n";
  out << "(assert (" << (cond.strict ? ">=" : ">") << " " << target << " " << smt_decimal(cond.bound) << "))\n";
  out << "(check-sat)\n(exit)\n";
  return out.str();
}

}  // namespace zubov
