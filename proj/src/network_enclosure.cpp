#include "zubov/network_enclosure.hpp"

#include <sstream>

#include "zubov/smt.hpp"

namespace zubov {

namespace {

// Affine combination sum_j w[j] * in[j] + b over intervals.
Interval affine(const Eigen::MatrixXd& W, Eigen::Index k, std::span<const Interval> in, std::size_t stride,
                std::size_t offset, double b) {
  Interval acc(b);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    const double w = W(k, j);
    if (w == 0.0) continue;
    acc += w * in[static_cast<std::size_t>(j) * stride + offset];
  }
  return acc;
}

}  // namespace

namespace {

// Pre-activation value and Jacobian of every unit, from a pass over a point box.
struct UnitCenters {
  std::vector<std::vector<Interval>> z;
  std::vector<std::vector<Interval>> jz;  // unit-major, n entries per unit
};

Interval meet(Interval natural, Interval centered) {
  const Interval m(std::max(natural.lo, centered.lo), std::min(natural.hi, centered.hi));
  return m.lo <= m.hi ? m : natural;
}

// Second-order forward recursion over intervals. With `centers`, every
// pre-activation value and Jacobian is also enclosed by its mean-value form
// around the box midpoint and the tighter of the two is kept. With
// `record`, the pre-activation quantities are stored for later use as centers.
// `second_order` false skips the Hessian (and the Jacobian's mean-value form).
NetworkEnclosure propagate(const NeuralFunction& net, const Box& box, bool second_order, const UnitCenters* centers,
                           std::span<const Interval> offset, UnitCenters* record) {
  const std::size_t n = net.input_dim();
  const std::size_t nn = second_order ? n * n : 0;
  const std::size_t stride = 1 + n + nn;

  // Per unit: value, n Jacobian entries, n^2 Hessian entries.
  std::vector<Interval> cur(n * stride, Interval(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    cur[i * stride] = box[i];
    cur[i * stride + 1 + i] = Interval(1.0);
  }
  std::vector<Interval> next;
  std::vector<Interval> jz(n);
  std::vector<Interval> hz(n * n);

  const std::size_t L = net.layer_count();
  if (record) {
    record->z.assign(L, {});
    record->jz.assign(L, {});
  }
  for (std::size_t l = 0; l < L; ++l) {
    const auto& W = net.weights(l);
    const auto& b = net.bias(l);
    const bool hidden = l + 1 < L;
    next.assign(static_cast<std::size_t>(W.rows()) * stride, Interval(0.0));
    for (Eigen::Index k = 0; k < W.rows(); ++k) {
      const auto ku = static_cast<std::size_t>(k);
      Interval* out = &next[ku * stride];
      Interval z = affine(W, k, cur, stride, 0, b[k]);
      for (std::size_t i = 0; i < n; ++i) jz[i] = affine(W, k, cur, stride, 1 + i, 0.0);
      if (second_order) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i; j < n; ++j) {
            hz[i * n + j] = l == 0 ? Interval(0.0) : affine(W, k, cur, stride, 1 + n + i * n + j, 0.0);
            hz[j * n + i] = hz[i * n + j];
          }
        }
      }
      // The first layer is affine in x, so its natural enclosures are exact.
      if (centers && l > 0) {
        Interval zc = centers->z[l][ku];
        for (std::size_t i = 0; i < n; ++i) zc += jz[i] * offset[i];
        z = meet(z, zc);
        if (second_order) {
          for (std::size_t i = 0; i < n; ++i) {
            Interval jc = centers->jz[l][ku * n + i];
            for (std::size_t j = 0; j < n; ++j) jc += hz[i * n + j] * offset[j];
            jz[i] = meet(jz[i], jc);
          }
        }
      }
      if (record) {
        record->z[l].push_back(z);
        record->jz[l].insert(record->jz[l].end(), jz.begin(), jz.end());
      }
      if (!hidden) {
        out[0] = z;
        for (std::size_t i = 0; i < n; ++i) out[1 + i] = jz[i];
        for (std::size_t i = 0; i < nn; ++i) out[1 + n + i] = hz[i];
        continue;
      }
      const Interval s1 = tanh_d1(z);
      out[0] = tanh(z);
      for (std::size_t i = 0; i < n; ++i) out[1 + i] = s1 * jz[i];
      if (!second_order) continue;
      const Interval s2 = tanh_d2(z);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          const Interval jj = i == j ? sqr(jz[i]) : jz[i] * jz[j];
          const Interval h = s2 * jj + s1 * hz[i * n + j];
          out[1 + n + i * n + j] = h;
          out[1 + n + j * n + i] = h;
        }
      }
    }
    cur.swap(next);
  }

  NetworkEnclosure res;
  res.value = cur[0];
  res.gradient.assign(cur.begin() + 1, cur.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  res.hessian.assign(cur.begin() + 1 + static_cast<std::ptrdiff_t>(n), cur.begin() + static_cast<std::ptrdiff_t>(stride));
  return res;
}

NetworkEnclosure centered_eval(const NeuralFunction& net, const Box& box, bool second_order) {
  const std::size_t n = net.input_dim();
  if (box.dim() != n) throw std::invalid_argument("box has the wrong dimension");
  const std::vector<double> mid = box.midpoint();
  std::vector<Interval> point(n);
  std::vector<Interval> offset(n);
  for (std::size_t i = 0; i < n; ++i) {
    point[i] = Interval(mid[i]);
    offset[i] = box[i] - point[i];
  }
  thread_local UnitCenters centers;
  propagate(net, Box(point), second_order, nullptr, {}, &centers);
  return propagate(net, box, second_order, &centers, offset, nullptr);
}

}  // namespace

NetworkEnclosure interval_eval_network(const NeuralFunction& net, const Box& box) { return centered_eval(net, box, true); }

Interval interval_network_value(const NeuralFunction& net, const Box& box) { return centered_eval(net, box, false).value; }

NetworkValueFunction::NetworkValueFunction(NetworkPtr net) : net_(std::move(net)) {
  if (!net_) throw std::invalid_argument("null network");
}

std::string NetworkValueFunction::smt_term(SmtContext& ctx) const { return unfold_network_smt(*net_, ctx).front(); }

NetworkGeneratorFunction::NetworkGeneratorFunction(NetworkPtr net, StochasticSystem sys)
    : net_(std::move(net)), sys_(std::move(sys)) {
  if (!net_) throw std::invalid_argument("null network");
  if (net_->input_dim() != sys_.n()) throw std::invalid_argument("network and system dimensions differ");
}

double NetworkGeneratorFunction::value(std::span<const double> x) const {
  return generator_at(sys_, net_->eval_with_derivatives(x), x);
}

Interval NetworkGeneratorFunction::enclose(const Box& box) const {
  const std::size_t n = sys_.n();
  const NetworkEnclosure w = interval_eval_network(*net_, box);
  thread_local std::vector<Interval> packed;
  thread_local std::vector<Interval> scratch;
  packed.resize(n + n * n + 1);
  sys_.generator_program().eval(box.sides(), packed, scratch);
  Interval acc(0.0);
  for (std::size_t i = 0; i < n; ++i) acc += w.gradient[i] * packed[i];
  Interval diff(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sys_.generator_program().output_is_zero(n + i * n + j)) continue;
      diff += packed[n + i * n + j] * w.hessian[i * n + j];
    }
  }
  return acc + 0.5 * diff;
}

std::string NetworkGeneratorFunction::smt_term(SmtContext& ctx) const {
  const std::size_t n = sys_.n();
  const auto names = unfold_network_smt(*net_, ctx);
  std::string sum = "(+ 0.0";
  for (std::size_t i = 0; i < n; ++i) sum += " (* " + names[1 + i] + " " + to_smtlib(sys_.drift(i)) + ")";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Expression& a = sys_.diffusion_outer(i, j);
      if (a.is_constant() && a.value() == 0.0) continue;
      sum += " (* 0.5 " + to_smtlib(a) + " " + names[1 + n + i * n + j] + ")";
    }
  }
  return sum + ")";
}

std::vector<std::string> unfold_network_smt(const NeuralFunction& net, SmtContext& ctx) {
  std::ostringstream key;
  key << "network@" << static_cast<const void*>(&net);
  if (const auto* names = ctx.recall(key.str())) return *names;

  const std::size_t n = net.input_dim();
  const std::size_t nn = n * n;
  // Per unit: value, gradient, Hessian terms (names or literals).
  std::vector<std::vector<std::string>> cur(n);
  for (std::size_t i = 0; i < n; ++i) {
    cur[i].assign(1 + n + nn, "0.0");
    cur[i][0] = "x" + std::to_string(i + 1);
    cur[i][1 + i] = "1.0";
  }
  auto combine = [&](const Eigen::MatrixXd& W, Eigen::Index k, std::size_t slot, double b) {
    std::string term = "(+ " + smt_decimal(b);
    std::size_t used = 0;
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      const std::string& in = cur[static_cast<std::size_t>(j)][slot];
      if (W(k, j) == 0.0 || in == "0.0") continue;
      term += " (* " + smt_decimal(W(k, j)) + " " + in + ")";
      ++used;
    }
    if (used == 0 && b == 0.0) return std::string("0.0");
    return term + ")";
  };

  const std::size_t L = net.layer_count();
  for (std::size_t l = 0; l < L; ++l) {
    const auto& W = net.weights(l);
    const bool hidden = l + 1 < L;
    std::vector<std::vector<std::string>> next(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index k = 0; k < W.rows(); ++k) {
      const std::string tag = "l" + std::to_string(l + 1) + "n" + std::to_string(k + 1);
      auto& out = next[static_cast<std::size_t>(k)];
      out.assign(1 + n + nn, "0.0");
      const std::string z = ctx.define("z_" + tag, combine(W, k, 0, net.bias(l)[k]));
      std::vector<std::string> jz(n);
      std::vector<std::string> hz(nn, "0.0");
      for (std::size_t i = 0; i < n; ++i) {
        const std::string t = combine(W, k, 1 + i, 0.0);
        jz[i] = t == "0.0" ? t : ctx.define("dz_" + tag + "_" + std::to_string(i + 1), t);
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          const std::string t = combine(W, k, 1 + n + i * n + j, 0.0);
          hz[i * n + j] = hz[j * n + i] =
              t == "0.0" ? t : ctx.define("ddz_" + tag + "_" + std::to_string(i + 1) + std::to_string(j + 1), t);
        }
      }
      if (!hidden) {
        out[0] = z;
        for (std::size_t i = 0; i < n; ++i) out[1 + i] = jz[i];
        for (std::size_t c = 0; c < nn; ++c) out[1 + n + c] = hz[c];
        continue;
      }
      const std::string t = ctx.define("t_" + tag, "(tanh " + z + ")");
      const std::string s1 = ctx.define("s1_" + tag, "(- 1.0 (* " + t + " " + t + "))");
      const std::string s2 = ctx.define("s2_" + tag, "(* (- 2.0) " + t + " " + s1 + ")");
      out[0] = t;
      for (std::size_t i = 0; i < n; ++i) {
        out[1 + i] = jz[i] == "0.0" ? "0.0" : ctx.define("d_" + tag + "_" + std::to_string(i + 1), "(* " + s1 + " " + jz[i] + ")");
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          std::string term = "(+ (* " + s2 + " " + jz[i] + " " + jz[j] + ")";
          if (hz[i * n + j] != "0.0") term += " (* " + s1 + " " + hz[i * n + j] + ")";
          term += ")";
          out[1 + n + i * n + j] = out[1 + n + j * n + i] =
              ctx.define("dd_" + tag + "_" + std::to_string(i + 1) + std::to_string(j + 1), term);
        }
      }
    }
    cur.swap(next);
  }
  std::vector<std::string> names = cur.front();
  ctx.remember(key.str(), names);
  return names;
}

}  // namespace zubov
