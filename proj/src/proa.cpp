#include "zubov/proa.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace zubov {

namespace {

double min_on_ellipse(const BoxFunction& fn, const Eigen::MatrixXd& P, double c, std::size_t samples) {
  const auto n = P.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(P);
  const Eigen::MatrixXd L = llt.matrixL();
  // x = sqrt(c) L^{-T} u with |u| = 1 gives x^T P x = c.
  const Eigen::MatrixXd Linv_t = L.transpose().inverse();
  std::mt19937_64 rng(0);
  std::normal_distribution<double> normal;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd u(n);
  for (std::size_t k = 0; k < samples; ++k) {
    if (n == 2) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
      u << std::cos(a), std::sin(a);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
      u.normalize();
    }
    const Eigen::VectorXd x = std::sqrt(c) * Linv_t * u;
    best = std::min(best, fn.value(std::span<const double>(x.data(), static_cast<std::size_t>(n))));
  }
  return best;
}

double min_on_faces(const BoxFunction& fn, const Box& domain, std::size_t samples) {
  const std::size_t n = domain.dim();
  std::mt19937_64 rng(1);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double face : {domain[i].lo, domain[i].hi}) {
      for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) {
            x[j] = face;
          } else if (n == 2) {
            x[j] = domain[j].lo + domain[j].width() * static_cast<double>(k) / static_cast<double>(samples - 1);
          } else {
            x[j] = std::uniform_real_distribution<double>(domain[j].lo, domain[j].hi)(rng);
          }
        }
        best = std::min(best, fn.value(x));
      }
    }
  }
  return best;
}

nlohmann::json box_json(const Box& b) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < b.dim(); ++i) j.push_back({b[i].lo, b[i].hi});
  return j;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) throw std::runtime_error("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

VerifyStatus status_from_string(const std::string& s) {
  if (s == "CERTIFIED") return VerifyStatus::Certified;
  if (s == "FALSIFIED") return VerifyStatus::Falsified;
  return VerifyStatus::Unknown;
}

VerifyOutcome outcome_from_json(const nlohmann::json& j) {
  VerifyOutcome o;
  o.status = status_from_string(j.value("status", "UNKNOWN"));
  o.boxes = j.value("boxes", std::size_t{0});
  o.max_depth = j.value("max_depth", std::size_t{0});
  o.reason = j.value("reason", "");
  if (j.contains("witness")) o.witness = j.at("witness").get<std::vector<double>>();
  return o;
}

VerifyOutcome not_run() {
  VerifyOutcome o;
  o.reason = "not run";
  return o;
}

}  // namespace

QuadraticCertificate certify_quadratic(const StochasticSystem& sys, const QuadraticOptions& options) {
  const auto n = static_cast<Eigen::Index>(sys.n());
  QuadraticCertificate q;
  q.Q = options.Q.value_or(Eigen::MatrixXd::Identity(n, n));
  const Linearization lin = linearize(sys);
  q.P = solve_stochastic_lyapunov(lin.A, lin.S, q.Q);
  q.solved = true;
  q.epsilon = options.epsilon.value_or(default_epsilon(q.Q));
  q.r = symmetric_eigen(q.Q).front() - q.epsilon;

  const LevelResult local = find_local_level(sys, q.P, q.Q, q.r, options.levels);
  q.c_local = local.level;
  q.local_outcome = local.outcome;
  q.local_verified = local.outcome.certified();

  const Expression v = quadratic_form(q.P);
  const auto V = make_function(v, sys.n());
  const auto LV = expression_generator(sys, v);
  const double cap = ellipsoid_cap(q.P, sys.domain());
  q.zeta = q.epsilon;
  // A local level at the cap touches the domain boundary; restart the annulus
  // below it so the extended level keeps its sublevel set inside the domain.
  const double lower = q.c_local < cap ? q.c_local : 0.5 * cap;
  const LevelResult extended = find_largest_level(V, LV, lower, -q.zeta, cap, sys.domain(), options.levels);
  q.c2 = extended.level;
  q.c_local = std::min(q.c_local, q.c2);
  q.extended_outcome = extended.outcome;
  q.extended_verified = q.extended_outcome.certified();
  return q;
}

bool CompositeCertificate::complete() const {
  return failure.empty() && W && 0.0 < beta1 && beta1 < beta2 && 0.0 < c1 && c1 < c2 && quadratic_outcome.certified() &&
         neural_outcome.certified() && inner_inclusion.certified() && outer_inclusion.certified();
}

double CompositeCertificate::V(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return v.dot(P * v);
}

CompositeCertificate certify_composite(const StochasticSystem& sys, const QuadraticCertificate& quad, NetworkPtr W,
                                       std::string checkpoint, const CompositeOptions& options) {
  CompositeCertificate cert;
  cert.P = quad.P;
  cert.c2 = quad.c2;
  cert.W = W;
  cert.checkpoint = std::move(checkpoint);
  cert.quadratic_outcome = quad.extended_outcome;
  cert.neural_outcome = not_run();
  cert.inner_inclusion = not_run();
  cert.outer_inclusion = not_run();
  if (!quad.extended_verified) {
    cert.failure = "quadratic extended level";
    return cert;
  }
  const Box& domain = sys.domain();
  const auto Wf = std::make_shared<NetworkValueFunction>(W);
  const auto LW = std::make_shared<NetworkGeneratorFunction>(W, sys);
  const auto V = make_function(quadratic_form(quad.P), sys.n());
  cert.zeta = options.zeta.value_or(default_zeta(LW, domain));

  const double w_ellipse = min_on_ellipse(*Wf, quad.P, quad.c2, options.boundary_samples);
  const double w_faces = min_on_faces(*Wf, domain, options.boundary_samples);
  const double provisional = options.provisional_fraction * w_ellipse;
  if (!(provisional > 0.0) || !(w_faces > provisional)) {
    cert.failure = "neural level range: W is not positive on {V = c2} or not larger on the domain faces";
    return cert;
  }

  try {
    const LevelResult upper = find_largest_level(Wf, LW, provisional, -cert.zeta, w_faces, domain, options.levels);
    cert.beta2 = upper.level;
    const LevelResult lower =
        find_smallest_lower_level(Wf, LW, cert.beta2, -cert.zeta, domain, options.levels, provisional);
    cert.beta1 = lower.level;
    cert.neural_outcome = lower.outcome;
    cert.neural_outcome.boxes += upper.outcome.boxes;
  } catch (const LevelSearchError& e) {
    cert.neural_outcome = e.last_outcome();
    cert.failure = std::string("neural annulus condition: ") + e.what();
    return cert;
  }

  try {
    const C1Result c1 = find_smallest_c1(V, Wf, cert.beta1, domain, options.levels.verify);
    cert.c1 = c1.c1;
    cert.inner_inclusion = c1.inclusion;
  } catch (const std::invalid_argument& e) {
    cert.failure = std::string("inner inclusion: ") + e.what();
    return cert;
  }
  if (!cert.inner_inclusion.certified()) {
    cert.failure = "inner inclusion W^beta1 within V^c1";
    return cert;
  }
  if (!(cert.c1 < cert.c2)) {
    cert.failure = "c1 is not below c2";
    return cert;
  }
  cert.outer_inclusion = check_inclusion(V, cert.c2, Wf, cert.beta2, domain, options.levels.verify);
  if (!cert.outer_inclusion.certified()) {
    // Any smaller quadratic level is still certified; shrink c2 to just below
    // the smallest V on {W >= beta2}.
    const auto negV = make_function(-quadratic_form(quad.P), sys.n());
    const MaximizeResult m = maximize(negV, {{Wf, cert.beta2, std::numeric_limits<double>::infinity()}}, domain,
                                      options.levels.verify);
    const double shrunk = -m.upper / (1.0 + options.levels.relative_tolerance);
    if (!m.region_empty && shrunk > cert.c1 && shrunk < cert.c2) {
      const VerifyOutcome o = check_inclusion(V, shrunk, Wf, cert.beta2, domain, options.levels.verify);
      if (o.certified()) {
        cert.c2 = shrunk;
        cert.outer_inclusion = o;
      }
    }
  }
  if (!cert.outer_inclusion.certified()) cert.failure = "outer inclusion V^c2 within W^beta2";
  return cert;
}

std::vector<NamedCondition> certificate_conditions(const StochasticSystem& sys, const QuadraticCertificate& quad,
                                                   const CompositeCertificate& cert) {
  if (!cert.W) throw std::invalid_argument("certificate has no network");
  const double inf = std::numeric_limits<double>::infinity();
  const Expression v = quadratic_form(quad.P);
  const auto V = make_function(v, sys.n());
  const auto LV = expression_generator(sys, v);
  const auto exprs = local_certificate_expressions(sys, quad.P, quad.Q);
  const auto W = std::make_shared<NetworkValueFunction>(cert.W);
  const auto LW = std::make_shared<NetworkGeneratorFunction>(cert.W, sys);

  std::vector<NamedCondition> out;
  auto add = [&](std::string name, BoxFunctionPtr target, std::vector<RangeConstraint> region, double bound, std::string what) {
    Condition c;
    c.target = std::move(target);
    c.region = std::move(region);
    c.bound = bound;
    c.domain = sys.domain();
    c.description = std::move(what);
    out.push_back({std::move(name), std::move(c)});
  };
  add("local_condition", make_function(exprs.frobenius_squared, sys.n()), {{V, -inf, quad.c_local}},
      4.0 * quad.r * quad.r, "local condition: ||M(x)||_F^2 <= 4 r^2 on {x^T P x <= c_local}");
  add("quadratic_annulus", LV, {{V, quad.c_local, quad.c2}}, -quad.zeta, "LV <= -epsilon on {c_local <= V <= c2}");
  add("neural_annulus", LW, {{W, cert.beta1, cert.beta2}}, -cert.zeta, "LW <= -zeta on {beta1 <= W <= beta2}");
  add("inner_inclusion", V, {{W, -inf, cert.beta1}}, cert.c1, "{W <= beta1} within {V <= c1}");
  add("outer_inclusion", W, {{V, -inf, cert.c2}}, cert.beta2, "{V <= c2} within {W <= beta2}");
  return out;
}

double probability_bound(double v, double w, double c1, double c2, double beta1, double beta2) {
  if (w > beta2) return 0.0;
  const double quadratic = 1.0 - v / c2;
  double p = quadratic;
  if (w >= beta1) p = std::max((1.0 - w / beta2) * (1.0 - c1 / c2), quadratic);
  return std::clamp(p, 0.0, 1.0);
}

double p_lower_bound(const CompositeCertificate& cert, std::span<const double> x0) {
  if (!cert.complete()) {
    throw IncompleteCertificate("certificate is incomplete" + (cert.failure.empty() ? std::string() : ": " + cert.failure));
  }
  return probability_bound(cert.V(x0), cert.W->value(x0), cert.c1, cert.c2, cert.beta1, cert.beta2);
}

Heatmap heatmap(const CompositeCertificate& cert, const Box& domain, std::span<const std::size_t> resolution) {
  const std::size_t n = domain.dim();
  if (resolution.size() != n) throw std::invalid_argument("one resolution per dimension is required");
  Heatmap map;
  map.resolution.assign(resolution.begin(), resolution.end());
  std::size_t total = 1;
  for (std::size_t r : resolution) {
    if (r == 0) throw std::invalid_argument("resolution must be positive");
    total *= r;
  }
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t cell = 0; cell < total; ++cell) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = domain[i].lo + domain[i].width() * (static_cast<double>(idx[i]) + 0.5) / static_cast<double>(resolution[i]);
    }
    map.p.push_back(p_lower_bound(cert, x));
    map.points.push_back(std::move(x));
    for (std::size_t d = 0; d < n && ++idx[d] == resolution[d]; ++d) idx[d] = 0;
  }
  return map;
}

void write_heatmap_csv(std::ostream& out, const Heatmap& map) {
  const std::size_t n = map.resolution.size();
  for (std::size_t i = 0; i < n; ++i) out << "x" << i + 1 << ",";
  out << "p\n";
  out.precision(10);
  for (std::size_t k = 0; k < map.p.size(); ++k) {
    for (double v : map.points[k]) out << v << ",";
    out << map.p[k] << "\n";
  }
}

void write_heatmap_pgm(std::ostream& out, const Heatmap& map) {
  if (map.resolution.size() != 2) throw std::invalid_argument("PGM output needs a two-dimensional map");
  const std::size_t w = map.resolution[0];
  const std::size_t h = map.resolution[1];
  out << "P5\n" << w << " " << h << "\n255\n";
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t j = h - 1 - row;
    for (std::size_t i = 0; i < w; ++i) {
      const double p = std::clamp(map.p[j * w + i], 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * p))));
    }
  }
}

ValidationReport validate_bound(const CompositeCertificate& cert, const StochasticSystem& sys, const SimConfig& cfg,
                                std::span<const std::vector<double>> points, double slack) {
  ValidationReport report;
  report.slack = slack;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ValidationEntry e;
    e.point = points[i];
    e.p = p_lower_bound(cert, e.point);
    e.estimate = estimate_attraction(sys, e.point, cfg, i);
    e.margin = e.estimate.frequency - e.p;
    e.red_flag = e.estimate.upper < e.p;
    e.below_slack = e.estimate.frequency < e.p - slack;
    report.red_flags += e.red_flag ? 1 : 0;
    report.slack_violations += e.below_slack ? 1 : 0;
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::vector<std::vector<double>> points_inside(const CompositeCertificate& cert, const Box& domain, std::size_t count,
                                               std::size_t per_dim) {
  std::vector<std::vector<double>> inside;
  for (auto& x : grid_points(domain, per_dim, std::numeric_limits<std::size_t>::max())) {
    if (cert.W->value(x) < cert.beta2) inside.push_back(std::move(x));
  }
  if (inside.size() <= count) return inside;
  std::vector<std::vector<double>> picked;
  for (std::size_t k = 0; k < count; ++k) picked.push_back(inside[k * inside.size() / count]);
  return picked;
}

nlohmann::json to_json(const VerifyOutcome& o) {
  nlohmann::json j{{"status", to_string(o.status)},
                   {"boxes", o.boxes},
                   {"max_depth", o.max_depth},
                   {"reason", o.reason}};
  if (!o.witness.empty()) j["witness"] = o.witness;
  if (o.inconclusive) j["inconclusive_box"] = box_json(*o.inconclusive);
  return j;
}

nlohmann::json to_json(const QuadraticCertificate& q) {
  return {{"P", matrix_json(q.P)},
          {"Q", matrix_json(q.Q)},
          {"epsilon", q.epsilon},
          {"r", q.r},
          {"c_local", q.c_local},
          {"c2", q.c2},
          {"zeta", q.zeta},
          {"solved", q.solved},
          {"local_verified", q.local_verified},
          {"extended_verified", q.extended_verified},
          {"local_outcome", to_json(q.local_outcome)},
          {"extended_outcome", to_json(q.extended_outcome)}};
}

QuadraticCertificate quadratic_from_json(const nlohmann::json& j) {
  try {
    QuadraticCertificate q;
    q.P = matrix_from_json(j.at("P"));
    q.Q = matrix_from_json(j.at("Q"));
    q.epsilon = j.at("epsilon").get<double>();
    q.r = j.at("r").get<double>();
    q.c_local = j.at("c_local").get<double>();
    q.c2 = j.at("c2").get<double>();
    q.zeta = j.at("zeta").get<double>();
    q.solved = j.at("solved").get<bool>();
    q.local_verified = j.at("local_verified").get<bool>();
    q.extended_verified = j.at("extended_verified").get<bool>();
    q.local_outcome = outcome_from_json(j.at("local_outcome"));
    q.extended_outcome = outcome_from_json(j.at("extended_outcome"));
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("quadratic report: ") + e.what());
  }
}

nlohmann::json to_json(const CompositeCertificate& c) {
  return {{"complete", c.complete()},
          {"failure", c.failure},
          {"P", matrix_json(c.P)},
          {"c1", c.c1},
          {"c2", c.c2},
          {"checkpoint", c.checkpoint},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"zeta", c.zeta},
          {"quadratic_outcome", to_json(c.quadratic_outcome)},
          {"neural_outcome", to_json(c.neural_outcome)},
          {"inner_inclusion", to_json(c.inner_inclusion)},
          {"outer_inclusion", to_json(c.outer_inclusion)}};
}

CompositeCertificate composite_from_json(const nlohmann::json& j, const std::string& base_dir) {
  try {
    CompositeCertificate c;
    c.failure = j.at("failure").get<std::string>();
    c.P = matrix_from_json(j.at("P"));
    c.c1 = j.at("c1").get<double>();
    c.c2 = j.at("c2").get<double>();
    c.checkpoint = j.at("checkpoint").get<std::string>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.zeta = j.at("zeta").get<double>();
    c.quadratic_outcome = outcome_from_json(j.at("quadratic_outcome"));
    c.neural_outcome = outcome_from_json(j.at("neural_outcome"));
    c.inner_inclusion = outcome_from_json(j.at("inner_inclusion"));
    c.outer_inclusion = outcome_from_json(j.at("outer_inclusion"));
    std::filesystem::path path(c.checkpoint);
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    c.W = std::make_shared<NeuralFunction>(NeuralFunction::load(path.string()));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("certificate report: ") + e.what());
  }
}

nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"point", e.point},
                       {"p", e.p},
                       {"frequency", e.estimate.frequency},
                       {"converged", e.estimate.converged},
                       {"samples", e.estimate.samples},
                       {"ci_lower", e.estimate.lower},
                       {"ci_upper", e.estimate.upper},
                       {"margin", e.margin},
                       {"red_flag", e.red_flag},
                       {"below_slack", e.below_slack}});
  }
  return {{"slack", r.slack}, {"red_flags", r.red_flags}, {"slack_violations", r.slack_violations}, {"points", entries}};
}

}  // namespace zubov
