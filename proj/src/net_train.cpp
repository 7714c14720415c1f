#include <cmath>
#include <random>
#include <stdexcept>

#include "net_internal.hpp"
#include "zubov/net.hpp"

namespace zubov {

namespace {

struct GeneratorData {
  Eigen::MatrixXd f;      // n x N
  Eigen::MatrixXd outer;  // n^2 x N
  Eigen::VectorXd g;      // N
};

GeneratorData generator_data(const StochasticSystem& sys, const Eigen::MatrixXd& x) {
  const auto n = static_cast<Eigen::Index>(sys.n());
  const auto N = x.cols();
  GeneratorData d{Eigen::MatrixXd(n, N), Eigen::MatrixXd(n * n, N), Eigen::VectorXd(N)};
  std::vector<double> packed(static_cast<std::size_t>(n + n * n + 1));
  std::vector<double> scratch;
  std::vector<double> pt(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < N; ++p) {
    for (Eigen::Index i = 0; i < n; ++i) pt[static_cast<std::size_t>(i)] = x(i, p);
    sys.generator_program().eval(pt, packed, scratch);
    for (Eigen::Index i = 0; i < n; ++i) d.f(i, p) = packed[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < n * n; ++i) d.outer(i, p) = packed[static_cast<std::size_t>(n + i)];
    d.g[p] = packed.back();
  }
  return d;
}

// Zubov residual per collocation column, read off a tape whose first N columns are those points.
Eigen::VectorXd residuals(const detail::Tape& tape, const GeneratorData& gd, Eigen::Index N) {
  const auto n = static_cast<Eigen::Index>(tape.n);
  const auto nn = n * n;
  Eigen::VectorXd R(N);
  for (Eigen::Index p = 0; p < N; ++p) {
    double lw = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) lw += tape.jacobian(0, p * n + i) * gd.f(i, p);
    double diff = 0.0;
    for (Eigen::Index c = 0; c < nn; ++c) diff += gd.outer(c, p) * tape.hessian(0, p * nn + c);
    R[p] = lw + 0.5 * diff + gd.g[p] * (1.0 - tape.value(0, p));
  }
  return R;
}

}  // namespace

LossResult pinn_loss(const NeuralFunction& net, const StochasticSystem& sys, const Eigen::MatrixXd& collocation,
                     std::span<const ValueSample> data, const LossWeights& weights, bool with_gradient) {
  const auto n = static_cast<Eigen::Index>(sys.n());
  if (net.input_dim() != sys.n()) throw std::invalid_argument("network and system dimensions differ");
  if (collocation.rows() != n) throw std::invalid_argument("collocation points have the wrong dimension");
  const Eigen::Index Nc = collocation.cols();
  const auto Nd = static_cast<Eigen::Index>(data.size());
  const Eigen::Index N = Nc + Nd + 1;
  const auto nn = n * n;

  Eigen::MatrixXd x(n, N);
  x.leftCols(Nc) = collocation;
  for (Eigen::Index p = 0; p < Nd; ++p) {
    const auto& pt = data[static_cast<std::size_t>(p)].point;
    if (static_cast<Eigen::Index>(pt.size()) != n) throw std::invalid_argument("data point has the wrong dimension");
    for (Eigen::Index i = 0; i < n; ++i) x(i, Nc + p) = pt[static_cast<std::size_t>(i)];
  }
  x.col(N - 1).setZero();

  detail::Tape tape;
  detail::forward(net, x, tape);
  const GeneratorData gd = generator_data(sys, collocation);
  const Eigen::VectorXd R = residuals(tape, gd, Nc);

  LossResult res;
  res.residual = Nc > 0 ? weights.residual * R.squaredNorm() / static_cast<double>(Nc) : 0.0;
  const double w0 = tape.value(0, N - 1);
  res.boundary = weights.boundary * w0 * w0;
  double misfit = 0.0;
  for (Eigen::Index p = 0; p < Nd; ++p) {
    const double e = tape.value(0, Nc + p) - data[static_cast<std::size_t>(p)].w_hat;
    misfit += e * e;
  }
  res.data = Nd > 0 ? weights.data * misfit / static_cast<double>(Nd) : 0.0;
  res.total = res.residual + res.boundary + res.data;
  if (!with_gradient) return res;

  Eigen::MatrixXd v_bar = Eigen::MatrixXd::Zero(1, N);
  Eigen::MatrixXd j_bar = Eigen::MatrixXd::Zero(1, N * n);
  Eigen::MatrixXd h_bar = Eigen::MatrixXd::Zero(1, N * nn);
  for (Eigen::Index p = 0; p < Nc; ++p) {
    const double dR = 2.0 * weights.residual * R[p] / static_cast<double>(Nc);
    v_bar(0, p) = -gd.g[p] * dR;
    for (Eigen::Index i = 0; i < n; ++i) j_bar(0, p * n + i) = gd.f(i, p) * dR;
    for (Eigen::Index c = 0; c < nn; ++c) h_bar(0, p * nn + c) = 0.5 * gd.outer(c, p) * dR;
  }
  for (Eigen::Index p = 0; p < Nd; ++p) {
    const double e = tape.value(0, Nc + p) - data[static_cast<std::size_t>(p)].w_hat;
    v_bar(0, Nc + p) = 2.0 * weights.data * e / static_cast<double>(Nd);
  }
  v_bar(0, N - 1) = 2.0 * weights.boundary * w0;

  res.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  detail::backward(net, tape, v_bar, j_bar, h_bar, res.gradient);
  return res;
}

double mean_squared_residual(const NeuralFunction& net, const StochasticSystem& sys, const Eigen::MatrixXd& points) {
  if (points.cols() == 0) return 0.0;
  detail::Tape tape;
  detail::forward(net, points, tape);
  const Eigen::VectorXd R = residuals(tape, generator_data(sys, points), points.cols());
  return R.squaredNorm() / static_cast<double>(points.cols());
}

Eigen::MatrixXd uniform_points(const Box& box, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(box.dim());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(count));
  for (Eigen::Index p = 0; p < x.cols(); ++p) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uniform_real_distribution<double> dist(box[static_cast<std::size_t>(i)].lo, box[static_cast<std::size_t>(i)].hi);
      x(i, p) = dist(rng);
    }
  }
  return x;
}

void TrainConfig::validate() const {
  if (collocation < 1) throw std::invalid_argument("collocation count must be at least 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (final_learning_rate < 0.0) throw std::invalid_argument("final learning rate must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("Adam decay rates must lie in [0, 1)");
  for (std::size_t h : hidden) {
    if (h == 0) throw std::invalid_argument("hidden layer sizes must be positive");
  }
}

TrainResult train(const StochasticSystem& sys, const TrainConfig& cfg, std::span<const ValueSample> data,
                  const CheckpointCallback& on_checkpoint) {
  cfg.validate();
  std::vector<std::size_t> sizes{sys.n()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);

  TrainResult res;
  res.net = NeuralFunction::glorot(sizes, cfg.seed);
  Eigen::VectorXd theta = res.net.parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  std::mt19937_64 seeds(cfg.seed ^ 0x5eedc011ULL);
  res.history.reserve(cfg.epochs);

  const double decay = cfg.final_learning_rate > 0.0 && cfg.epochs > 1
                           ? std::pow(cfg.final_learning_rate / cfg.learning_rate, 1.0 / static_cast<double>(cfg.epochs - 1))
                           : 1.0;
  double lr = cfg.learning_rate;
  double b1t = 1.0;
  double b2t = 1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::MatrixXd colloc = uniform_points(sys.domain(), cfg.collocation, seeds());
    const LossResult loss = pinn_loss(res.net, sys, colloc, data, cfg.weights);
    if (!std::isfinite(loss.total) || !loss.gradient.allFinite()) {
      res.diverged = true;
      res.message = "non-finite loss at epoch " + std::to_string(epoch);
      return res;
    }
    res.history.push_back({loss.total, loss.residual, loss.boundary, loss.data});

    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * loss.gradient;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * loss.gradient.cwiseAbs2();
    const Eigen::VectorXd m_hat = m / (1.0 - b1t);
    const Eigen::VectorXd v_hat = v / (1.0 - b2t);
    theta.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + cfg.adam_epsilon);
    if (!theta.allFinite()) {
      res.diverged = true;
      res.message = "non-finite parameters after epoch " + std::to_string(epoch);
      return res;
    }
    res.net.set_parameters(theta);
    lr *= decay;

    if (on_checkpoint && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      on_checkpoint(epoch + 1, res.net);
    }
  }
  return res;
}

}  // namespace zubov
