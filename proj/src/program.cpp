#include "zubov/program.hpp"

#include <cmath>
#include <unordered_map>

namespace zubov {

namespace {

double apply_pow(double v, int k) { return std::pow(v, k); }
Interval apply_pow(Interval v, int k) { return pow(v, k); }
double apply_exp(double v) { return std::exp(v); }
Interval apply_exp(Interval v) { return exp(v); }
double apply_tanh(double v) { return std::tanh(v); }
Interval apply_tanh(Interval v) { return tanh(v); }
double constant_of(double c, double) { return c; }
Interval constant_of(double c, Interval) { return Interval(c); }

}  // namespace

Program::Program(const Expression& output) : Program(std::span<const Expression>(&output, 1)) {}

Program::Program(std::span<const Expression> outputs) {
  std::unordered_map<const ExprNode*, std::uint32_t> slot;

  // Iterative post-order so deep trees do not exhaust the stack.
  auto compile = [&](const Expression& root) -> std::uint32_t {
    struct Frame {
      Expression e;
      bool expanded;
    };
    std::vector<Frame> stack{{root, false}};
    while (!stack.empty()) {
      Frame frame = stack.back();
      stack.pop_back();
      if (slot.count(frame.e.id())) continue;
      if (!frame.expanded) {
        stack.push_back({frame.e, true});
        for (const auto& child : frame.e.children()) {
          if (!slot.count(child.id())) stack.push_back({child, false});
        }
        continue;
      }
      Instr ins{};
      const auto ch = frame.e.children();
      switch (frame.e.kind()) {
        case ExprKind::Constant: ins.op = Op::Const; ins.c = frame.e.value(); break;
        case ExprKind::Variable: ins.op = Op::Var; ins.a = static_cast<std::uint32_t>(frame.e.index()); break;
        case ExprKind::Negate: ins.op = Op::Neg; break;
        case ExprKind::Add: ins.op = Op::Add; break;
        case ExprKind::Subtract: ins.op = Op::Sub; break;
        case ExprKind::Multiply: ins.op = Op::Mul; break;
        case ExprKind::Divide: ins.op = Op::Div; break;
        case ExprKind::Power: ins.op = Op::Pow; ins.k = frame.e.exponent(); break;
        case ExprKind::Exp: ins.op = Op::Exp; break;
        case ExprKind::Tanh: ins.op = Op::Tanh; break;
      }
      if (!ch.empty()) ins.a = slot.at(ch[0].id());
      if (ch.size() > 1) ins.b = slot.at(ch[1].id());
      slot.emplace(frame.e.id(), static_cast<std::uint32_t>(code_.size()));
      code_.push_back(ins);
    }
    return slot.at(root.id());
  };

  for (const auto& e : outputs) {
    outputs_.push_back(compile(e));
    zero_outputs_.push_back(e.is_constant(0.0));
  }
}

template <class T, bool Checked>
void Program::run(std::span<const T> x, std::span<T> out, std::vector<T>& regs) const {
  if (regs.size() < code_.size()) regs.resize(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    switch (ins.op) {
      case Op::Const: regs[i] = constant_of(ins.c, T{}); break;
      case Op::Var: regs[i] = x[ins.a]; break;
      case Op::Neg: regs[i] = -regs[ins.a]; break;
      case Op::Add: regs[i] = regs[ins.a] + regs[ins.b]; break;
      case Op::Sub: regs[i] = regs[ins.a] - regs[ins.b]; break;
      case Op::Mul: regs[i] = regs[ins.a] * regs[ins.b]; break;
      case Op::Div:
        if constexpr (Checked) {
          if (regs[ins.b] == 0.0) throw EvalError("division by zero");
        }
        regs[i] = regs[ins.a] / regs[ins.b];
        break;
      case Op::Pow: regs[i] = apply_pow(regs[ins.a], ins.k); break;
      case Op::Exp: regs[i] = apply_exp(regs[ins.a]); break;
      case Op::Tanh: regs[i] = apply_tanh(regs[ins.a]); break;
    }
  }
  for (std::size_t j = 0; j < outputs_.size(); ++j) out[j] = regs[outputs_[j]];
}

void Program::eval(std::span<const double> x, std::span<double> out, std::vector<double>& scratch) const {
  run<double, false>(x, out, scratch);
}

void Program::eval_checked(std::span<const double> x, std::span<double> out, std::vector<double>& scratch) const {
  run<double, true>(x, out, scratch);
  for (double v : out.first(outputs_.size())) {
    if (!std::isfinite(v)) throw EvalError("non-finite result");
  }
}

void Program::eval(std::span<const Interval> x, std::span<Interval> out, std::vector<Interval>& scratch) const {
  run<Interval, false>(x, out, scratch);
  for (const Interval& v : out.first(outputs_.size())) {
    if (!v.is_finite()) throw IntervalError("non-finite enclosure");
  }
}

double Program::eval1(std::span<const double> x) const {
  std::vector<double> scratch;
  double out = 0.0;
  eval_checked(x, std::span<double>(&out, 1), scratch);
  return out;
}

Interval Program::eval1(const Box& box) const {
  std::vector<Interval> scratch;
  Interval out;
  eval(box.sides(), std::span<Interval>(&out, 1), scratch);
  return out;
}

}  // namespace zubov
