#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "zubov/sim.hpp"
#include "zubov/system.hpp"

namespace zubov {

/// Fully connected network: tanh on hidden layers, identity on the output.
/// Layer l maps sizes[l] -> sizes[l+1] with weights (out x in) and bias.
class NeuralFunction {
 public:
  NeuralFunction() = default;
  /// All parameters zero. Needs at least two sizes, the last equal to 1.
  explicit NeuralFunction(std::vector<std::size_t> sizes);
  /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static NeuralFunction glorot(std::vector<std::size_t> sizes, std::uint64_t seed);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t layer_count() const { return weights_.size(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const Eigen::MatrixXd& weights(std::size_t l) const { return weights_[l]; }
  const Eigen::VectorXd& bias(std::size_t l) const { return biases_[l]; }
  Eigen::MatrixXd& weights(std::size_t l) { return weights_[l]; }
  Eigen::VectorXd& bias(std::size_t l) { return biases_[l]; }

  /// Parameters flattened layer by layer: weights row-major, then bias.
  std::size_t parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  double value(std::span<const double> x) const;
  /// Value, input gradient and input Hessian by second-order forward propagation.
  Jet2 eval_with_derivatives(std::span<const double> x) const;

  nlohmann::json to_json() const;
  /// Throws std::runtime_error on a malformed document.
  static NeuralFunction from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static NeuralFunction load(const std::string& path);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct LossWeights {
  double residual = 1.0;
  double boundary = 1.0;
  double data = 1.0;
};

struct LossResult {
  double total = 0.0;
  double residual = 0.0;
  double boundary = 0.0;
  double data = 0.0;
  /// d total / d parameters, same layout as NeuralFunction::parameters().
  Eigen::VectorXd gradient;
};

/// Mean squared Zubov residual over the collocation points (columns of
/// `collocation`), plus W(0)^2, plus the mean squared misfit on `data`.
LossResult pinn_loss(const NeuralFunction& net, const StochasticSystem& sys, const Eigen::MatrixXd& collocation,
                     std::span<const ValueSample> data, const LossWeights& weights = {}, bool with_gradient = true);

/// Mean of (LW + g (1 - W))^2 over the columns of `points`.
double mean_squared_residual(const NeuralFunction& net, const StochasticSystem& sys, const Eigen::MatrixXd& points);

/// n x count matrix of points uniform in the box.
Eigen::MatrixXd uniform_points(const Box& box, std::size_t count, std::uint64_t seed);

/// W as a SecondOrderFunction for the system module's residual helpers.
SecondOrderFunction network_jet(const NeuralFunction& net);

struct TrainConfig {
  std::vector<std::size_t> hidden = {10, 10, 10};
  std::size_t collocation = 1000;
  /// Grid nodes per side for the value dataset; 0 disables the data term.
  std::size_t data_per_dim = 21;
  std::size_t data_max_points = 2000;
  std::size_t epochs = 5000;
  double learning_rate = 1e-3;
  /// Learning rate reached at the last epoch by geometric decay; 0 keeps it constant.
  double final_learning_rate = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;

  void validate() const;
};

struct EpochLoss {
  double total;
  double residual;
  double boundary;
  double data;
};

struct TrainResult {
  NeuralFunction net;
  std::vector<EpochLoss> history;
  /// True when a non-finite loss stopped training; `net` is then the last finite state.
  bool diverged = false;
  std::string message;
};

using CheckpointCallback = std::function<void(std::size_t epoch, const NeuralFunction&)>;

/// Adam on the full loss, collocation points redrawn every epoch.
TrainResult train(const StochasticSystem& sys, const TrainConfig& cfg, std::span<const ValueSample> data,
                  const CheckpointCallback& on_checkpoint = {});

}  // namespace zubov
