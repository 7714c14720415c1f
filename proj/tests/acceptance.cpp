// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// blocking criterion fails. Criterion 9 is reported but never blocks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "zubov/config.hpp"
#include "zubov/linlyap.hpp"
#include "zubov/net.hpp"
#include "zubov/network_enclosure.hpp"
#include "zubov/proa.hpp"
#include "zubov/sim.hpp"

namespace fs = std::filesystem;
using namespace zubov;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail, bool blocking = true) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : (blocking ? "FAIL" : "NOT MET (non-blocking)"), detail.c_str());
  std::fflush(stdout);
  if (!pass && blocking) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunConfig shipped(const char* name) { return load_run_config(std::string(ZUBOV_CONFIG_DIR) + "/" + name); }

double relative_error(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::max(std::fabs(a), std::fabs(b))); }

// Criterion 8: derivatives and enclosures on random instances.
void derivative_properties() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.5, 1.5);

  double worst_expr = 0.0;
  int exprs = 0;
  while (exprs < 100) {
    const Expression e = random_expression(rng, 2, 4);
    const std::size_t var = static_cast<std::size_t>(exprs % 2);
    const Expression d = differentiate(e, var);
    const std::vector<double> x{u(rng), u(rng)};
    const double h = 1e-5;
    auto xp = x;
    auto xm = x;
    xp[var] += h;
    xm[var] -= h;
    double fd = 0.0;
    double exact = 0.0;
    try {
      fd = (eval_point(e, xp) - eval_point(e, xm)) / (2.0 * h);
      exact = eval_point(d, x);
    } catch (const EvalError&) {
      continue;
    }
    if (!std::isfinite(exact) || std::fabs(exact) > 1e3) continue;
    worst_expr = std::max(worst_expr, relative_error(fd, exact));
    ++exprs;
  }

  const StochasticSystem sys = van_der_pol();
  double worst_net = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    NeuralFunction net = NeuralFunction::glorot({2, 4, 4, 1}, 500 + static_cast<std::uint64_t>(trial));
    Eigen::VectorXd theta = net.parameters();
    std::normal_distribution<double> g(0.0, 0.2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += g(rng);
    net.set_parameters(theta);
    const Eigen::MatrixXd pts = uniform_points(sys.domain(), 5, 700 + static_cast<std::uint64_t>(trial));
    const std::vector<ValueSample> data{{{0.3, -0.2}, 0.2}};
    const LossResult r = pinn_loss(net, sys, pts, data);
    NeuralFunction probe = net;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double h = 1e-4;
      Eigen::VectorXd tp = theta;
      tp[i] += h;
      probe.set_parameters(tp);
      const double lp = pinn_loss(probe, sys, pts, data, {}, false).total;
      tp[i] -= 2 * h;
      probe.set_parameters(tp);
      const double lm = pinn_loss(probe, sys, pts, data, {}, false).total;
      worst_net = std::max(worst_net, relative_error((lp - lm) / (2 * h), r.gradient[i]));
    }
  }

  // Containment: expressions and network enclosures over random boxes.
  std::size_t trials = 0;
  std::size_t misses = 0;
  std::uniform_real_distribution<double> side(-2.0, 2.0);
  std::vector<Expression> pool;
  for (int k = 0; k < 200; ++k) pool.push_back(random_expression(rng, 2, 4));
  std::vector<NeuralFunction> nets;
  for (int k = 0; k < 20; ++k) nets.push_back(NeuralFunction::glorot({2, 10, 10, 10, 1}, 900 + static_cast<std::uint64_t>(k)));
  while (trials < 100000) {
    double a = side(rng), b = side(rng), c = side(rng), d = side(rng);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const Box box = box2(a, b, c, d);
    const bool use_net = trials % 4 == 0;
    for (int k = 0; k < 10; ++k, ++trials) {
      const std::vector<double> x{std::uniform_real_distribution<double>(a, b)(rng),
                                  std::uniform_real_distribution<double>(c, d)(rng)};
      if (use_net) {
        const NeuralFunction& net = nets[trials % nets.size()];
        const NetworkEnclosure e = interval_eval_network(net, box);
        const Jet2 j = net.eval_with_derivatives(x);
        bool ok = e.value.contains(j.value);
        for (std::size_t i = 0; i < 2; ++i) ok = ok && e.gradient[i].contains(j.gradient[static_cast<Eigen::Index>(i)]);
        for (std::size_t i = 0; i < 4; ++i) ok = ok && e.hessian[i].contains(j.hessian(static_cast<Eigen::Index>(i / 2), static_cast<Eigen::Index>(i % 2)));
        misses += ok ? 0 : 1;
      } else {
        const Expression& e = pool[trials % pool.size()];
        try {
          misses += eval_interval(e, box).contains(eval_point(e, x)) ? 0 : 1;
        } catch (const IntervalError&) {
          // No enclosure claimed.
        } catch (const EvalError&) {
        }
      }
    }
  }
  report(8, worst_expr <= 1e-5 && worst_net <= 1e-4 && misses == 0,
         fmt("expression AD max rel err %.2e", worst_expr) + fmt(", parameter gradient max rel err %.2e", worst_net) + ", " +
             std::to_string(misses) + " containment failures in " + std::to_string(trials) + " trials");
}

// Criterion 7: the 1-D Zubov oracle.
void one_dimensional_oracle() {
  const auto t0 = Clock::now();
  const RunConfig cfg = shipped("oned.json");
  const StochasticSystem sys = build_system(cfg.system);
  const auto data = generate_value_dataset(sys, cfg.sim, cfg.train.data_per_dim, cfg.train.data_max_points);
  const TrainResult r = train(sys, cfg.train, data);
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double x = -2.0 + 4.0 * k / 100.0;
    worst = std::max(worst, std::fabs(r.net.value(std::vector<double>{x}) - (1.0 - std::exp(-0.05 * x * x))));
  }
  const double w1 = estimate_value(sys, std::vector<double>{1.0}, cfg.sim).w_hat;
  const double err = std::fabs(w1 - (1.0 - std::exp(-0.05)));
  report(7, worst <= 0.02 && err <= 2e-3,
         fmt("max grid error %.4f", worst) + fmt(", |w_hat(1) - (1 - e^-0.05)| = %.2e", err) + fmt(" (%.1f s)", since(t0)));
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "zubov_acceptance";
  fs::create_directories(work);
  const RunConfig cfg = shipped("vdp.json");
  const StochasticSystem sys = build_system(cfg.system);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);

  // 1. Lyapunov solve.
  {
    const auto t0 = Clock::now();
    const Linearization lin = linearize(sys);
    const Eigen::MatrixXd P = solve_stochastic_lyapunov(lin.A, lin.S, Q);
    const double secs = since(t0);
    Eigen::MatrixXd ref(2, 2);
    ref << 2.2439, -0.7805, -0.7805, 1.4634;
    const double dev = (P - ref).cwiseAbs().maxCoeff();
    report(1, dev <= 2e-3 && secs < 1.0, fmt("max |dP| = %.2e", dev) + fmt(" (%.3f s)", secs));
  }

  // 2 and 3. Quadratic certificate.
  QuadraticCertificate quad;
  {
    const auto t0 = Clock::now();
    const Linearization lin = linearize(sys);
    const Eigen::MatrixXd P = solve_stochastic_lyapunov(lin.A, lin.S, Q);
    const double r = symmetric_eigen(Q).front() - default_epsilon(Q);
    const LevelResult local = find_local_level(sys, P, Q, r, cfg.levels);
    const double secs = since(t0);
    report(2, local.outcome.certified() && local.level >= 0.25 && local.level <= 0.34 && secs < 300.0,
           fmt("r = %.4f", r) + fmt(", c_local = %.4f", local.level) + fmt(" (%.2f s)", secs));
  }
  {
    const auto t0 = Clock::now();
    quad = certify_quadratic(sys, cfg.quadratic_options());
    const double secs = since(t0);
    report(3, quad.extended_verified && quad.c2 >= 2.0 && quad.c2 <= 2.4 && secs < 600.0,
           fmt("c2 = %.4f", quad.c2) + fmt(" (%.2f s)", secs));
  }

  // 4. Neural certificate.
  CompositeCertificate cert;
  {
    const auto t0 = Clock::now();
    const auto data = generate_value_dataset(sys, cfg.sim, cfg.train.data_per_dim, cfg.train.data_max_points);
    const TrainResult trained = train(sys, cfg.train, data);
    const double train_secs = since(t0);
    const double held_out = mean_squared_residual(trained.net, sys, uniform_points(sys.domain(), 10000, cfg.seed + 12345));
    const fs::path ckpt = work / "vdp_checkpoint.json";
    trained.net.save(ckpt.string());
    const auto t1 = Clock::now();
    cert = certify_composite(sys, quad, std::make_shared<NeuralFunction>(trained.net), ckpt.string(), cfg.composite_options());
    const double cert_secs = since(t1);
    std::printf("  training %.1f s, held-out mean residual^2 %.3e, certification %.1f s\n", train_secs, held_out, cert_secs);
    std::printf("  c_local %.4f  c1 %.4f  c2 %.4f  beta1 %.4f  beta2 %.4f  zeta %.3e  %s\n", quad.c_local, cert.c1, cert.c2,
                cert.beta1, cert.beta2, cert.zeta, cert.complete() ? "complete" : ("incomplete: " + cert.failure).c_str());
    std::size_t in_w = 0;
    std::size_t in_v = 0;
    if (cert.complete()) {
      std::mt19937_64 rng(99);
      std::uniform_real_distribution<double> u1(sys.domain()[0].lo, sys.domain()[0].hi);
      std::uniform_real_distribution<double> u2(sys.domain()[1].lo, sys.domain()[1].hi);
      for (int k = 0; k < 100000; ++k) {
        const std::vector<double> x{u1(rng), u2(rng)};
        in_w += cert.W->value(x) <= cert.beta2 ? 1 : 0;
        in_v += cert.V(x) <= cert.c2 ? 1 : 0;
      }
    }
    const double cell = sys.domain()[0].width() * sys.domain()[1].width() / 100000.0;
    const double ratio = in_v > 0 ? static_cast<double>(in_w) / static_cast<double>(in_v) : 0.0;
    report(4, cert.complete() && ratio >= 1.2,
           fmt("area W^beta2 = %.3f", in_w * cell) + fmt(", area V^c2 = %.3f", in_v * cell) + fmt(", ratio %.3f", ratio));
  }

  // 5. Soundness sampling of every certified condition.
  {
    std::string detail;
    bool pass = true;
    if (!cert.complete()) {
      pass = false;
      detail = "certificate incomplete";
    } else {
      std::uint64_t seed = 1;
      for (const auto& [name, cond] : certificate_conditions(sys, quad, cert)) {
        std::size_t tried = 0;
        const std::size_t bad = count_violations(cond, 10000, seed++, &tried);
        pass = pass && bad == 0;
        detail += name + " " + std::to_string(bad) + "/10000; ";
      }
    }
    report(5, pass, detail);
  }

  // 6. Monte Carlo validation of the probability bound.
  {
    const auto t0 = Clock::now();
    bool pass = false;
    std::string detail = "certificate incomplete";
    if (cert.complete()) {
      const auto points = points_inside(cert, sys.domain(), 20);
      SimConfig sim = cfg.sim;
      sim.probability_samples = 10000;
      const ValidationReport r = validate_bound(cert, sys, sim, points, 0.03);
      double worst = 1.0;
      for (const auto& e : r.entries) worst = std::min(worst, e.margin);
      pass = points.size() == 20 && r.red_flags == 0 && r.slack_violations == 0;
      detail = std::to_string(points.size()) + " points, " + std::to_string(r.red_flags) + " red flags, " +
               std::to_string(r.slack_violations) + " slack violations" + fmt(", min(freq - p) = %.4f", worst) +
               fmt(" (%.1f s)", since(t0));
      std::ofstream(work / "validation.json") << to_json(r).dump(2) << "\n";
    }
    report(6, pass, detail);
  }

  one_dimensional_oracle();
  derivative_properties();

  // 9. Noise-induced attraction outside the deterministic cycle.
  {
    const auto t0 = Clock::now();
    const auto found = search_noise_stabilized(sys, cfg.sim, cfg.search_per_dim, cfg.search_samples, 0.05);
    if (!found) {
      report(9, false, "no grid point with a diverging noise-free path", false);
    } else {
      report(9, found->estimate.frequency >= 0.05,
             fmt("x0 = (%.3f, ", found->point[0]) + fmt("%.3f)", found->point[1]) +
                 fmt(", frequency %.4f", found->estimate.frequency) + " over " + std::to_string(found->estimate.samples) +
                 " paths" + fmt(" (%.1f s)", since(t0)),
             false);
    }
  }

  std::printf("%s\n", failures == 0 ? "all blocking criteria passed" : "some blocking criteria failed");
  return failures == 0 ? 0 : 1;
}
