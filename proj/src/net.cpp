#include "zubov/net.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "net_internal.hpp"

namespace zubov {

NeuralFunction::NeuralFunction(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs an input and an output layer");
  if (sizes_.back() != 1) throw std::invalid_argument("network output must be scalar");
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1]), static_cast<Eigen::Index>(sizes_[l])));
    biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1])));
  }
}

NeuralFunction NeuralFunction::glorot(std::vector<std::size_t> sizes, std::uint64_t seed) {
  NeuralFunction net(std::move(sizes));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& w = net.weights_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return net;
}

std::size_t NeuralFunction::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) count += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return count;
}

Eigen::VectorXd NeuralFunction::parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) theta[k++] = w(r, c);
    }
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) theta[k++] = biases_[l][r];
  }
  return theta;
}

void NeuralFunction::set_parameters(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count()) throw std::invalid_argument("parameter vector has the wrong size");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = theta[k++];
    }
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l][r] = theta[k++];
  }
}

double NeuralFunction::value(std::span<const double> x) const {
  if (x.size() != input_dim()) throw std::invalid_argument("input has the wrong dimension");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    a = l + 1 < layer_count() ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return a[0];
}

Jet2 NeuralFunction::eval_with_derivatives(std::span<const double> x) const {
  if (x.size() != input_dim()) throw std::invalid_argument("input has the wrong dimension");
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::MatrixXd pt = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, 1);
  detail::Tape tape;
  detail::forward(*this, pt, tape);
  Jet2 jet;
  jet.value = tape.value(0, 0);
  jet.gradient = tape.jacobian.row(0).transpose();
  jet.hessian = Eigen::Map<const Eigen::MatrixXd>(tape.hessian.data(), n, n);
  return jet;
}

nlohmann::json NeuralFunction::to_json() const {
  nlohmann::json j;
  j["format"] = "zubov-mlp-1";
  j["activation"] = "tanh";
  j["layer_sizes"] = sizes_;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const auto& w = weights_[l];
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    std::vector<double> b(biases_[l].data(), biases_[l].data() + biases_[l].size());
    layers.push_back({{"weights", flat}, {"bias", b}});
  }
  j["layers"] = layers;
  return j;
}

NeuralFunction NeuralFunction::from_json(const nlohmann::json& j) {
  try {
    if (j.contains("activation") && j.at("activation") != "tanh") throw std::runtime_error("only tanh networks are supported");
    NeuralFunction net(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto& layers = j.at("layers");
    if (layers.size() != net.layer_count()) throw std::runtime_error("layer count does not match layer_sizes");
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto& W = net.weights_[l];
      if (w.size() != static_cast<std::size_t>(W.size()) || b.size() != static_cast<std::size_t>(net.biases_[l].size())) {
        throw std::runtime_error("layer " + std::to_string(l) + " has the wrong number of parameters");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = w[k++];
      }
      for (std::size_t r = 0; r < b.size(); ++r) net.biases_[l][static_cast<Eigen::Index>(r)] = b[r];
    }
    if (!net.parameters().allFinite()) throw std::runtime_error("non-finite parameter");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
}

void NeuralFunction::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump(1) << "\n";
}

NeuralFunction NeuralFunction::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return from_json(j);
}

SecondOrderFunction network_jet(const NeuralFunction& net) {
  return [net](std::span<const double> x) { return net.eval_with_derivatives(x); };
}

namespace detail {

void forward(const NeuralFunction& net, const Eigen::MatrixXd& x, Tape& tape) {
  const auto n = x.rows();
  const auto N = x.cols();
  const auto nn = n * n;
  const std::size_t L = net.layer_count();
  tape.n = static_cast<std::size_t>(n);
  tape.points = static_cast<std::size_t>(N);
  tape.a.assign(L, {});
  tape.J.assign(L, {});
  tape.H.assign(L, {});
  tape.Jz.assign(L, {});
  tape.Hz.assign(L, {});
  tape.t.assign(L, {});

  tape.a[0] = x;
  tape.J[0] = Eigen::MatrixXd::Zero(n, N * n);
  for (Eigen::Index p = 0; p < N; ++p) {
    for (Eigen::Index i = 0; i < n; ++i) tape.J[0](i, p * n + i) = 1.0;
  }
  tape.H[0] = Eigen::MatrixXd::Zero(n, N * nn);

  for (std::size_t l = 0; l < L; ++l) {
    const auto& W = net.weights(l);
    Eigen::MatrixXd z = W * tape.a[l];
    z.colwise() += net.bias(l);
    Eigen::MatrixXd Jz = W * tape.J[l];
    Eigen::MatrixXd Hz = l == 0 ? Eigen::MatrixXd::Zero(W.rows(), N * nn) : Eigen::MatrixXd(W * tape.H[l]);

    if (l + 1 == L) {
      tape.value = std::move(z);
      tape.jacobian = std::move(Jz);
      tape.hessian = std::move(Hz);
      break;
    }
    const Eigen::MatrixXd t = z.array().tanh();
    Eigen::MatrixXd J = Jz;
    Eigen::MatrixXd H = Hz;
    for (Eigen::Index k = 0; k < W.rows(); ++k) {
      for (Eigen::Index p = 0; p < N; ++p) {
        const double s1 = 1.0 - t(k, p) * t(k, p);
        const double s2 = -2.0 * t(k, p) * s1;
        for (Eigen::Index i = 0; i < n; ++i) {
          J(k, p * n + i) = s1 * Jz(k, p * n + i);
          for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index c = p * nn + i * n + j;
            H(k, c) = s2 * (Jz(k, p * n + i) * Jz(k, p * n + j)) + s1 * Hz(k, c);
          }
        }
      }
    }
    tape.a[l + 1] = t;
    tape.J[l + 1] = std::move(J);
    tape.H[l + 1] = std::move(H);
    tape.Jz[l] = std::move(Jz);
    tape.Hz[l] = std::move(Hz);
    tape.t[l] = t;
  }
}

void backward(const NeuralFunction& net, const Tape& tape, const Eigen::MatrixXd& value_bar,
              const Eigen::MatrixXd& jacobian_bar, const Eigen::MatrixXd& hessian_bar, Eigen::VectorXd& grad) {
  const auto n = static_cast<Eigen::Index>(tape.n);
  const auto N = static_cast<Eigen::Index>(tape.points);
  const auto nn = n * n;
  const std::size_t L = net.layer_count();

  // Offsets of each layer's parameters in the flat vector.
  std::vector<Eigen::Index> offset(L);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offset[l] = off;
    off += net.weights(l).size() + net.bias(l).size();
  }

  Eigen::MatrixXd a_bar = value_bar;
  Eigen::MatrixXd J_bar = jacobian_bar;
  Eigen::MatrixXd H_bar = hessian_bar;
  for (std::size_t l = L; l-- > 0;) {
    const auto& W = net.weights(l);
    Eigen::MatrixXd z_bar;
    Eigen::MatrixXd Jz_bar;
    Eigen::MatrixXd Hz_bar;
    if (l + 1 == L) {
      z_bar = std::move(a_bar);
      Jz_bar = std::move(J_bar);
      Hz_bar = std::move(H_bar);
    } else {
      const auto& t = tape.t[l];
      const auto& Jz = tape.Jz[l];
      const auto& Hz = tape.Hz[l];
      z_bar.resize(W.rows(), N);
      Jz_bar.resize(W.rows(), N * n);
      Hz_bar.resize(W.rows(), N * nn);
      for (Eigen::Index k = 0; k < W.rows(); ++k) {
        for (Eigen::Index p = 0; p < N; ++p) {
          const double tk = t(k, p);
          const double s1 = 1.0 - tk * tk;
          const double s2 = -2.0 * tk * s1;
          const double s3 = -2.0 * s1 * s1 + 4.0 * tk * tk * s1;
          double zb = s1 * a_bar(k, p);
          for (Eigen::Index i = 0; i < n; ++i) {
            const double ji = Jz(k, p * n + i);
            zb += s2 * J_bar(k, p * n + i) * ji;
            double jb = s1 * J_bar(k, p * n + i);
            for (Eigen::Index j = 0; j < n; ++j) {
              const Eigen::Index c = p * nn + i * n + j;
              const double hb = H_bar(k, c);
              zb += s3 * hb * ji * Jz(k, p * n + j) + s2 * hb * Hz(k, c);
              jb += s2 * (hb + H_bar(k, p * nn + j * n + i)) * Jz(k, p * n + j);
              Hz_bar(k, c) = s1 * hb;
            }
            Jz_bar(k, p * n + i) = jb;
          }
          z_bar(k, p) = zb;
        }
      }
    }

    Eigen::MatrixXd gW = z_bar * tape.a[l].transpose() + Jz_bar * tape.J[l].transpose();
    if (l > 0) gW += Hz_bar * tape.H[l].transpose();
    const Eigen::VectorXd gb = z_bar.rowwise().sum();
    Eigen::Index k = offset[l];
    for (Eigen::Index r = 0; r < gW.rows(); ++r) {
      for (Eigen::Index c = 0; c < gW.cols(); ++c) grad[k++] += gW(r, c);
    }
    for (Eigen::Index r = 0; r < gb.size(); ++r) grad[k++] += gb[r];

    if (l > 0) {
      a_bar = W.transpose() * z_bar;
      J_bar = W.transpose() * Jz_bar;
      H_bar = W.transpose() * Hz_bar;
    }
  }
}

}  // namespace detail

}  // namespace zubov
