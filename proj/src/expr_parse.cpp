#include <cctype>
#include <cstdlib>
#include <string>

#include "zubov/expr.hpp"

namespace zubov {

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::size_t n) : text_(text), n_(n) {}

  Expression run() {
    Expression e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected token");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expression expr() {
    Expression left = term();
    for (;;) {
      if (accept('+')) {
        left = Expression::make(ExprKind::Add, {left, term()});
      } else if (accept('-')) {
        left = Expression::make(ExprKind::Subtract, {left, term()});
      } else {
        return left;
      }
    }
  }

  Expression term() {
    Expression left = unary();
    for (;;) {
      if (accept('*')) {
        left = Expression::make(ExprKind::Multiply, {left, unary()});
      } else if (accept('/')) {
        left = Expression::make(ExprKind::Divide, {left, unary()});
      } else {
        return left;
      }
    }
  }

  Expression unary() {
    if (accept('-')) {
      Expression operand = unary();
      if (operand.is_constant()) return Expression::constant(-operand.value());
      return Expression::make(ExprKind::Negate, {operand});
    }
    return power();
  }

  Expression power() {
    Expression base = primary();
    while (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_ || (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))) {
        pos_ = start;
        fail("expected a non-negative integer exponent");
      }
      const long k = std::strtol(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr, 10);
      if (k > 64) {
        pos_ = start;
        fail("exponent too large");
      }
      base = Expression::make(ExprKind::Power, {base}, static_cast<int>(k));
    }
    return base;
  }

  Expression primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expression inner = expr();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "x") {
        const std::size_t digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (digits == pos_) {
          pos_ = start;
          fail("variable needs an index");
        }
        const unsigned long idx = std::strtoul(std::string(text_.substr(digits, pos_ - digits)).c_str(), nullptr, 10);
        if (idx < 1 || idx > n_) {
          pos_ = start;
          fail("variable index out of range");
        }
        return Expression::variable(idx - 1);
      }
      if (name == "exp" || name == "tanh") {
        expect('(');
        Expression arg = expr();
        expect(')');
        return Expression::make(name == "exp" ? ExprKind::Exp : ExprKind::Tanh, {arg});
      }
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    fail("unexpected token");
  }

  Expression number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t count = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        fail("malformed exponent");
      }
    }
    const double v = std::strtod(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr);
    return Expression::constant(v);
  }

  std::string_view text_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse(std::string_view text, std::size_t n) { return Parser(text, n).run(); }

}  // namespace zubov
