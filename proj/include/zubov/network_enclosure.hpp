#pragma once

#include <memory>
#include <vector>

#include "zubov/interval.hpp"
#include "zubov/net.hpp"
#include "zubov/system.hpp"
#include "zubov/verify.hpp"

namespace zubov {

struct NetworkEnclosure {
  Interval value;
  std::vector<Interval> gradient;
  /// Row-major n x n.
  std::vector<Interval> hessian;
};

/// Interval version of the second-order forward recursion. tanh and its
/// first two derivatives are enclosed by their exact ranges over each
/// pre-activation interval. Pre-activation values and Jacobians beyond the
/// first layer are also bounded by their mean-value forms around the box
/// midpoint, which keeps the enclosures tight on small boxes.
NetworkEnclosure interval_eval_network(const NeuralFunction& net, const Box& box);

/// Interval value of the network only.
Interval interval_network_value(const NeuralFunction& net, const Box& box);

using NetworkPtr = std::shared_ptr<const NeuralFunction>;

/// W itself as a box function.
class NetworkValueFunction final : public BoxFunction {
 public:
  explicit NetworkValueFunction(NetworkPtr net);
  std::size_t dim() const override { return net_->input_dim(); }
  double value(std::span<const double> x) const override { return net_->value(x); }
  Interval enclose(const Box& box) const override { return interval_network_value(*net_, box); }
  std::string smt_term(SmtContext& ctx) const override;

 private:
  NetworkPtr net_;
};

/// LW for the network W and the system's generator.
class NetworkGeneratorFunction final : public BoxFunction {
 public:
  NetworkGeneratorFunction(NetworkPtr net, StochasticSystem sys);
  std::size_t dim() const override { return net_->input_dim(); }
  double value(std::span<const double> x) const override;
  Interval enclose(const Box& box) const override;
  std::string smt_term(SmtContext& ctx) const override;

 private:
  NetworkPtr net_;
  StochasticSystem sys_;
};

/// Defines value, gradient and Hessian of the network in `ctx` as
/// affine + tanh terms (one tanh per hidden neuron) and returns their names:
/// value, then n gradient entries, then n^2 Hessian entries row-major.
std::vector<std::string> unfold_network_smt(const NeuralFunction& net, SmtContext& ctx);

}  // namespace zubov
