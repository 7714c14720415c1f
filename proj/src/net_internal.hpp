#pragma once

// Batched second-order forward pass and its adjoint, shared by the network
// evaluation and the training loss.

#include <vector>

#include <Eigen/Dense>

#include "zubov/net.hpp"

namespace zubov::detail {

/// Column layout for N points in n dimensions: values use column t,
/// Jacobian rows column t*n+i, Hessians column t*n*n + i*n + j.
struct Tape {
  std::size_t n = 0;
  std::size_t points = 0;
  // Inputs of each layer.
  std::vector<Eigen::MatrixXd> a, J, H;
  // Pre-activation derivatives and tanh values of each hidden layer.
  std::vector<Eigen::MatrixXd> Jz, Hz, t;
  // Network output.
  Eigen::MatrixXd value, jacobian, hessian;
};

/// `x` is n x N.
void forward(const NeuralFunction& net, const Eigen::MatrixXd& x, Tape& tape);

/// Parameter gradient given adjoints of the output value (1 x N), gradient
/// (1 x N n) and Hessian (1 x N n^2). Accumulates into `grad`.
void backward(const NeuralFunction& net, const Tape& tape, const Eigen::MatrixXd& value_bar,
              const Eigen::MatrixXd& jacobian_bar, const Eigen::MatrixXd& hessian_bar, Eigen::VectorXd& grad);

}  // namespace zubov::detail
