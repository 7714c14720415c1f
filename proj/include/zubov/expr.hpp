#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zubov/interval.hpp"

namespace zubov {

enum class ExprKind { Constant, Variable, Negate, Add, Subtract, Multiply, Divide, Power, Exp, Tanh };

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExprNode;

/// Immutable scalar expression over state variables x1..xn.
///
/// Nodes are shared, so copies are cheap and a tree built by differentiation
/// is really a DAG. The arithmetic operators below fold constants; the raw
/// factory `make` does not, which is what the parser uses to keep its output
/// a literal image of the input text.
class Expression {
 public:
  Expression();  // the constant 0

  static Expression constant(double value);
  static Expression variable(std::size_t index);
  static Expression make(ExprKind kind, std::vector<Expression> children, int exponent = 0);

  ExprKind kind() const;
  double value() const;       // Constant only
  std::size_t index() const;  // Variable only
  int exponent() const;       // Power only
  std::span<const Expression> children() const;

  bool is_constant() const { return kind() == ExprKind::Constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }
  const ExprNode* id() const { return node_.get(); }

  /// One past the largest variable index referenced, 0 for closed terms.
  std::size_t arity() const;

 private:
  explicit Expression(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  ExprKind kind = ExprKind::Constant;
  double value = 0.0;
  std::size_t index = 0;
  int exponent = 0;
  std::vector<Expression> children;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator*(double a, const Expression& b);
Expression operator+(double a, const Expression& b);
Expression operator-(double a, const Expression& b);
Expression pow(const Expression& base, int exponent);
Expression exp(const Expression& a);
Expression tanh(const Expression& a);

/// Sum of a list of terms; the empty sum is 0.
Expression sum(std::span<const Expression> terms);

Expression differentiate(const Expression& e, std::size_t variable);

bool structurally_equal(const Expression& a, const Expression& b);

/// Infix text accepted by `parse`: parse(to_string(e), n) is structurally equal to e.
std::string to_string(const Expression& e);
/// SMT-LIB2 real-arithmetic term over constants x1..xn.
std::string to_smtlib(const Expression& e);
/// Exact decimal (no exponent) rendering of a finite double, as SMT-LIB wants it.
std::string smt_decimal(double v);

/// Grammar (standard precedence, left associative):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' integer)*
///   primary := number | 'x'k | ('exp' | 'tanh') '(' expr ')' | '(' expr ')'
/// A unary minus applied directly to a numeric literal yields a negative constant.
Expression parse(std::string_view text, std::size_t n);

/// Checked double evaluation: throws EvalError on division by zero or a non-finite result.
double eval_point(const Expression& e, std::span<const double> x);
/// Enclosure of e over the box; throws IntervalError on division by an interval containing zero.
Interval eval_interval(const Expression& e, const Box& box);

/// Total degree when e is a polynomial, -1 otherwise.
int polynomial_degree(const Expression& e);
std::size_t node_count(const Expression& e);

}  // namespace zubov
