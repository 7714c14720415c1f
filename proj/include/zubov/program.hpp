#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zubov/expr.hpp"
#include "zubov/interval.hpp"

namespace zubov {

/// Straight-line register program compiled from one or more expressions.
/// Shared subterms are computed once. Used on the hot paths (simulation,
/// branch-and-bound) where walking the tree would dominate.
class Program {
 public:
  Program() = default;
  explicit Program(std::span<const Expression> outputs);
  explicit Program(const Expression& output);

  std::size_t output_count() const { return outputs_.size(); }
  std::size_t instruction_count() const { return code_.size(); }
  /// True when output i is the literal constant 0.
  bool output_is_zero(std::size_t i) const { return zero_outputs_[i]; }

  /// Unchecked evaluation; `scratch` is resized as needed so callers can reuse it.
  void eval(std::span<const double> x, std::span<double> out, std::vector<double>& scratch) const;
  /// Throws EvalError on division by zero or non-finite outputs.
  void eval_checked(std::span<const double> x, std::span<double> out, std::vector<double>& scratch) const;
  void eval(std::span<const Interval> x, std::span<Interval> out, std::vector<Interval>& scratch) const;

  double eval1(std::span<const double> x) const;
  Interval eval1(const Box& box) const;

 private:
  enum class Op : std::uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Tanh };
  struct Instr {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    int k = 0;
    double c = 0.0;
  };

  template <class T, bool Checked>
  void run(std::span<const T> x, std::span<T> out, std::vector<T>& regs) const;

  std::vector<Instr> code_;
  std::vector<std::uint32_t> outputs_;
  std::vector<bool> zero_outputs_;
};

}  // namespace zubov
