#include "zubov/expr.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <unordered_map>

#include "zubov/program.hpp"

namespace zubov {

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

const std::shared_ptr<const ExprNode>& zero_node() {
  static const auto node = std::make_shared<const ExprNode>();
  return node;
}

}  // namespace

Expression::Expression() : node_(zero_node()) {}

Expression Expression::constant(double value) {
  if (!std::isfinite(value)) throw EvalError("non-finite constant");
  auto node = std::make_shared<ExprNode>();
  node->kind = ExprKind::Constant;
  node->value = value;
  return Expression(std::move(node));
}

Expression Expression::variable(std::size_t index) {
  auto node = std::make_shared<ExprNode>();
  node->kind = ExprKind::Variable;
  node->index = index;
  return Expression(std::move(node));
}

Expression Expression::make(ExprKind kind, std::vector<Expression> children, int exponent) {
  std::size_t expected = 0;
  switch (kind) {
    case ExprKind::Constant:
    case ExprKind::Variable: throw std::invalid_argument("use constant() or variable() for leaves");
    case ExprKind::Negate:
    case ExprKind::Power:
    case ExprKind::Exp:
    case ExprKind::Tanh: expected = 1; break;
    default: expected = 2; break;
  }
  if (children.size() != expected) throw std::invalid_argument("wrong number of children");
  if (kind == ExprKind::Power && exponent < 0) throw std::invalid_argument("negative exponent");
  auto node = std::make_shared<ExprNode>();
  node->kind = kind;
  node->exponent = exponent;
  node->children = std::move(children);
  return Expression(std::move(node));
}

ExprKind Expression::kind() const { return node_->kind; }
double Expression::value() const { return node_->value; }
std::size_t Expression::index() const { return node_->index; }
int Expression::exponent() const { return node_->exponent; }
std::span<const Expression> Expression::children() const { return node_->children; }

std::size_t Expression::arity() const {
  std::unordered_map<const ExprNode*, std::size_t> memo;
  std::function<std::size_t(const Expression&)> walk = [&](const Expression& e) -> std::size_t {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    std::size_t r = e.kind() == ExprKind::Variable ? e.index() + 1 : 0;
    for (const auto& c : e.children()) r = std::max(r, walk(c));
    memo.emplace(e.id(), r);
    return r;
  };
  return walk(*this);
}

// Folding constructors.

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expression::make(ExprKind::Add, {a, b});
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expression::make(ExprKind::Subtract, {a, b});
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.value());
  if (a.kind() == ExprKind::Negate) return a.children()[0];
  return Expression::make(ExprKind::Negate, {a});
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expression::make(ExprKind::Multiply, {a, b});
}

Expression operator/(const Expression& a, const Expression& b) {
  if (b.is_constant(0.0)) throw EvalError("division by constant zero");
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() / b.value());
  if (a.is_constant(0.0)) return Expression::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expression::make(ExprKind::Divide, {a, b});
}

Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }
Expression operator+(double a, const Expression& b) { return Expression::constant(a) + b; }
Expression operator-(double a, const Expression& b) { return Expression::constant(a) - b; }

Expression pow(const Expression& base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("negative exponent");
  if (exponent == 0) return Expression::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return Expression::constant(std::pow(base.value(), exponent));
  return Expression::make(ExprKind::Power, {base}, exponent);
}

Expression exp(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::exp(a.value()));
  return Expression::make(ExprKind::Exp, {a});
}

Expression tanh(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::tanh(a.value()));
  return Expression::make(ExprKind::Tanh, {a});
}

Expression sum(std::span<const Expression> terms) {
  Expression acc = Expression::constant(0.0);
  for (const auto& t : terms) acc = acc + t;
  return acc;
}

Expression differentiate(const Expression& root, std::size_t variable) {
  std::unordered_map<const ExprNode*, Expression> memo;
  std::function<Expression(const Expression&)> d = [&](const Expression& e) -> Expression {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expression r;
    const auto ch = e.children();
    switch (e.kind()) {
      case ExprKind::Constant: r = Expression::constant(0.0); break;
      case ExprKind::Variable: r = Expression::constant(e.index() == variable ? 1.0 : 0.0); break;
      case ExprKind::Negate: r = -d(ch[0]); break;
      case ExprKind::Add: r = d(ch[0]) + d(ch[1]); break;
      case ExprKind::Subtract: r = d(ch[0]) - d(ch[1]); break;
      case ExprKind::Multiply: r = d(ch[0]) * ch[1] + ch[0] * d(ch[1]); break;
      case ExprKind::Divide: {
        const Expression da = d(ch[0]);
        const Expression db = d(ch[1]);
        r = da / ch[1] - (ch[0] * db) / pow(ch[1], 2);
        break;
      }
      case ExprKind::Power: {
        const int k = e.exponent();
        r = (static_cast<double>(k) * pow(ch[0], k - 1)) * d(ch[0]);
        break;
      }
      case ExprKind::Exp: r = e * d(ch[0]); break;
      case ExprKind::Tanh: r = (1.0 - pow(e, 2)) * d(ch[0]); break;
    }
    memo.emplace(e.id(), r);
    return r;
  };
  return d(root);
}

bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.id() == b.id()) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::Constant: return a.value() == b.value();
    case ExprKind::Variable: return a.index() == b.index();
    case ExprKind::Power:
      if (a.exponent() != b.exponent()) return false;
      break;
    default: break;
  }
  const auto ca = a.children();
  const auto cb = b.children();
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!structurally_equal(ca[i], cb[i])) return false;
  }
  return true;
}

namespace {

// Shortest %g rendering that reads back to the same double.
std::string shortest(double v) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Binding strength used by the printer; mirrors the parser's grammar.
int level(const Expression& e) {
  switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Subtract: return 1;
    case ExprKind::Multiply:
    case ExprKind::Divide: return 2;
    case ExprKind::Negate: return 3;
    case ExprKind::Power: return 4;
    default: return 5;
  }
}

void print(const Expression& e, std::string& out);

void print_at(const Expression& e, int required, std::string& out) {
  if (level(e) < required) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expression& e, std::string& out) {
  const auto ch = e.children();
  switch (e.kind()) {
    case ExprKind::Constant:
      if (std::signbit(e.value())) {
        out += '(';
        out += shortest(e.value());
        out += ')';
      } else {
        out += shortest(e.value());
      }
      return;
    case ExprKind::Variable: out += 'x' + std::to_string(e.index() + 1); return;
    case ExprKind::Negate:
      out += '-';
      print_at(ch[0], 3, out);
      return;
    case ExprKind::Power:
      print_at(ch[0], 5, out);
      out += '^' + std::to_string(e.exponent());
      return;
    case ExprKind::Exp:
    case ExprKind::Tanh:
      out += e.kind() == ExprKind::Exp ? "exp(" : "tanh(";
      print(ch[0], out);
      out += ')';
      return;
    default: break;
  }
  const int p = level(e);
  const char* op = e.kind() == ExprKind::Add        ? " + "
                   : e.kind() == ExprKind::Subtract ? " - "
                   : e.kind() == ExprKind::Multiply ? " * "
                                                    : " / ";
  print_at(ch[0], p, out);
  out += op;
  print_at(ch[1], p + 1, out);
}

}  // namespace

std::string to_string(const Expression& e) {
  std::string out;
  print(e, out);
  return out;
}

std::string smt_decimal(double v) {
  if (!std::isfinite(v)) throw EvalError("non-finite constant in SMT export");
  const bool negative = std::signbit(v) && v != 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", std::fabs(v));
  // buf looks like d.dddddddddddddddde[+-]XX
  std::string s(buf);
  const auto epos = s.find('e');
  std::string mantissa = s.substr(0, 1) + s.substr(2, epos - 2);
  int exp10 = std::atoi(s.c_str() + epos + 1);
  // value = 0.mantissa * 10^(exp10 + 1)
  int point = exp10 + 1;
  std::string digits = mantissa;
  std::string result;
  if (point <= 0) {
    result = "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
  } else if (static_cast<std::size_t>(point) >= digits.size()) {
    result = digits + std::string(static_cast<std::size_t>(point) - digits.size(), '0') + ".0";
  } else {
    result = digits.substr(0, static_cast<std::size_t>(point)) + "." + digits.substr(static_cast<std::size_t>(point));
  }
  // trim trailing zeros after the point, keep one digit
  if (auto dot = result.find('.'); dot != std::string::npos) {
    while (result.size() > dot + 2 && result.back() == '0') result.pop_back();
  }
  // trim leading zeros before the point
  while (result.size() > 1 && result[0] == '0' && result[1] != '.') result.erase(0, 1);
  return negative ? "(- " + result + ")" : result;
}

std::string to_smtlib(const Expression& e) {
  const auto ch = e.children();
  switch (e.kind()) {
    case ExprKind::Constant: return smt_decimal(e.value());
    case ExprKind::Variable: return "x" + std::to_string(e.index() + 1);
    case ExprKind::Negate: return "(- " + to_smtlib(ch[0]) + ")";
    case ExprKind::Add: return "(+ " + to_smtlib(ch[0]) + " " + to_smtlib(ch[1]) + ")";
    case ExprKind::Subtract: return "(- " + to_smtlib(ch[0]) + " " + to_smtlib(ch[1]) + ")";
    case ExprKind::Multiply: return "(* " + to_smtlib(ch[0]) + " " + to_smtlib(ch[1]) + ")";
    case ExprKind::Divide: return "(/ " + to_smtlib(ch[0]) + " " + to_smtlib(ch[1]) + ")";
    case ExprKind::Power: {
      const std::string base = to_smtlib(ch[0]);
      std::string s = "(*";
      for (int i = 0; i < e.exponent(); ++i) s += " " + base;
      return s + ")";
    }
    case ExprKind::Exp: return "(exp " + to_smtlib(ch[0]) + ")";
    case ExprKind::Tanh: return "(tanh " + to_smtlib(ch[0]) + ")";
  }
  return {};
}

double eval_point(const Expression& e, std::span<const double> x) {
  if (e.arity() > x.size()) throw EvalError("point has fewer coordinates than the expression uses");
  return Program(e).eval1(x);
}

Interval eval_interval(const Expression& e, const Box& box) {
  if (e.arity() > box.dim()) throw IntervalError("box has fewer dimensions than the expression uses");
  return Program(e).eval1(box);
}

int polynomial_degree(const Expression& root) {
  std::unordered_map<const ExprNode*, int> memo;
  std::function<int(const Expression&)> deg = [&](const Expression& e) -> int {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    const auto ch = e.children();
    int r = -1;
    switch (e.kind()) {
      case ExprKind::Constant: r = 0; break;
      case ExprKind::Variable: r = 1; break;
      case ExprKind::Negate: r = deg(ch[0]); break;
      case ExprKind::Add:
      case ExprKind::Subtract: {
        const int a = deg(ch[0]);
        const int b = deg(ch[1]);
        r = (a < 0 || b < 0) ? -1 : std::max(a, b);
        break;
      }
      case ExprKind::Multiply: {
        const int a = deg(ch[0]);
        const int b = deg(ch[1]);
        r = (a < 0 || b < 0) ? -1 : a + b;
        break;
      }
      case ExprKind::Divide: {
        const int a = deg(ch[0]);
        r = (a >= 0 && ch[1].is_constant()) ? a : -1;
        break;
      }
      case ExprKind::Power: {
        const int a = deg(ch[0]);
        r = a < 0 ? -1 : a * e.exponent();
        break;
      }
      case ExprKind::Exp:
      case ExprKind::Tanh: r = deg(ch[0]) == 0 ? 0 : -1; break;
    }
    memo.emplace(e.id(), r);
    return r;
  };
  return deg(root);
}

std::size_t node_count(const Expression& root) {
  std::unordered_map<const ExprNode*, bool> seen;
  std::function<void(const Expression&)> walk = [&](const Expression& e) {
    if (!seen.emplace(e.id(), true).second) return;
    for (const auto& c : e.children()) walk(c);
  };
  walk(root);
  return seen.size();
}

}  // namespace zubov
