#include "zubov/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace zubov {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  T out{};
  read(j, key, out, where);
  return out;
}

Expression parse_field(const std::string& text, std::size_t n, const std::string& where) {
  try {
    return parse(text, n);
  } catch (const ParseError& e) {
    throw ConfigError(where + ": " + e.what() + " in \"" + text + "\"");
  }
}

}  // namespace

SystemSpec parse_system_spec(const json& j) {
  const std::string where = "system";
  check_keys(j, where, {"n", "m", "f", "sigma", "g", "domain", "positivity_radius"});
  SystemSpec s;
  s.n = require<std::size_t>(j, "n", where);
  s.m = require<std::size_t>(j, "m", where);
  s.f = require<std::vector<std::string>>(j, "f", where);
  s.sigma = require<std::vector<std::vector<std::string>>>(j, "sigma", where);
  read(j, "g", s.g, where);
  read(j, "positivity_radius", s.positivity_radius, where);
  const auto domain = require<std::vector<std::vector<double>>>(j, "domain", where);

  if (s.n == 0) throw ConfigError("system.n must be positive");
  if (s.f.size() != s.n) throw ConfigError("system.f must have n entries");
  if (s.sigma.size() != s.n) throw ConfigError("system.sigma must have n rows");
  for (const auto& row : s.sigma) {
    if (row.size() != s.m) throw ConfigError("system.sigma rows must have m entries");
  }
  if (domain.size() != s.n) throw ConfigError("system.domain must have n [lower, upper] pairs");
  for (const auto& side : domain) {
    if (side.size() != 2 || !(side[0] < side[1])) throw ConfigError("system.domain entries must be [lower, upper] with lower < upper");
    s.lower.push_back(side[0]);
    s.upper.push_back(side[1]);
  }
  if (!(s.positivity_radius > 0.0)) throw ConfigError("system.positivity_radius must be positive");
  return s;
}

StochasticSystem build_system(const SystemSpec& spec) {
  std::vector<Expression> f;
  for (std::size_t i = 0; i < spec.n; ++i) f.push_back(parse_field(spec.f[i], spec.n, "system.f[" + std::to_string(i) + "]"));
  std::vector<Expression> sigma;
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t k = 0; k < spec.m; ++k) {
      sigma.push_back(parse_field(spec.sigma[i][k], spec.n, "system.sigma[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    }
  }
  const Expression g = spec.g.empty() ? default_weight(spec.n) : parse_field(spec.g, spec.n, "system.g");
  return StochasticSystem(std::move(f), std::move(sigma), spec.m, g, Box(spec.lower, spec.upper), spec.positivity_radius);
}

QuadraticOptions RunConfig::quadratic_options() const {
  QuadraticOptions o;
  o.levels = levels;
  o.Q = Q;
  o.epsilon = epsilon;
  return o;
}

CompositeOptions RunConfig::composite_options() const {
  CompositeOptions o;
  o.levels = levels;
  o.zeta = zeta;
  o.provisional_fraction = provisional_fraction;
  return o;
}

RunConfig parse_run_config(const json& j, const std::string& base_dir) {
  check_keys(j, "config", {"system", "system_file", "sim", "train", "verify", "heatmap", "validate", "search", "output_dir", "seed"});
  RunConfig c;
  read(j, "seed", c.seed, "config");
  read(j, "output_dir", c.output_dir, "config");

  if (j.contains("system") == j.contains("system_file")) throw ConfigError("config: give exactly one of \"system\" and \"system_file\"");
  if (j.contains("system")) {
    c.system = parse_system_spec(j.at("system"));
  } else {
    std::filesystem::path p(require<std::string>(j, "system_file", "config"));
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("config: cannot read system file " + p.string());
    try {
      c.system = parse_system_spec(json::parse(in));
    } catch (const json::parse_error& e) {
      throw ConfigError(p.string() + ": " + e.what());
    }
  }

  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    check_keys(s, "sim", {"dt", "horizon", "conv_radius", "div_radius", "value_samples", "probability_samples"});
    read(s, "dt", c.sim.dt, "sim");
    read(s, "horizon", c.sim.horizon, "sim");
    read(s, "conv_radius", c.sim.conv_radius, "sim");
    read(s, "div_radius", c.sim.div_radius, "sim");
    read(s, "value_samples", c.sim.value_samples, "sim");
    read(s, "probability_samples", c.sim.probability_samples, "sim");
  }
  c.sim.seed = c.seed;

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train", {"hidden", "collocation", "data_per_dim", "data_max_points", "epochs", "learning_rate",
                            "final_learning_rate", "loss_weights", "checkpoint_every"});
    read(t, "hidden", c.train.hidden, "train");
    read(t, "collocation", c.train.collocation, "train");
    read(t, "data_per_dim", c.train.data_per_dim, "train");
    read(t, "data_max_points", c.train.data_max_points, "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "learning_rate", c.train.learning_rate, "train");
    read(t, "final_learning_rate", c.train.final_learning_rate, "train");
    read(t, "checkpoint_every", c.train.checkpoint_every, "train");
    if (t.contains("loss_weights")) {
      const auto& w = t.at("loss_weights");
      check_keys(w, "train.loss_weights", {"residual", "boundary", "data"});
      read(w, "residual", c.train.weights.residual, "train.loss_weights");
      read(w, "boundary", c.train.weights.boundary, "train.loss_weights");
      read(w, "data", c.train.weights.data, "train.loss_weights");
    }
  }
  c.train.seed = c.seed;

  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    check_keys(v, "verify", {"max_boxes", "min_width_fraction", "relative_tolerance", "probe_floor_fraction", "Q", "epsilon",
                             "zeta", "provisional_fraction"});
    read(v, "max_boxes", c.levels.verify.max_boxes, "verify");
    read(v, "min_width_fraction", c.levels.verify.min_width_fraction, "verify");
    read(v, "relative_tolerance", c.levels.relative_tolerance, "verify");
    read(v, "probe_floor_fraction", c.levels.probe_floor_fraction, "verify");
    read(v, "provisional_fraction", c.provisional_fraction, "verify");
    if (v.contains("epsilon")) c.epsilon = require<double>(v, "epsilon", "verify");
    if (v.contains("zeta")) c.zeta = require<double>(v, "zeta", "verify");
    if (v.contains("Q")) {
      const auto rows = require<std::vector<std::vector<double>>>(v, "Q", "verify");
      if (rows.size() != c.system.n) throw ConfigError("verify.Q must be n x n");
      Eigen::MatrixXd Q(static_cast<Eigen::Index>(c.system.n), static_cast<Eigen::Index>(c.system.n));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != c.system.n) throw ConfigError("verify.Q must be n x n");
        for (std::size_t k = 0; k < rows[r].size(); ++k) Q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
      }
      c.Q = Q;
    }
  }

  if (j.contains("heatmap")) {
    const auto& h = j.at("heatmap");
    check_keys(h, "heatmap", {"resolution"});
    read(h, "resolution", c.heatmap_resolution, "heatmap");
  }
  if (c.heatmap_resolution.empty()) c.heatmap_resolution.assign(c.system.n, 100);
  if (j.contains("validate")) {
    const auto& v = j.at("validate");
    check_keys(v, "validate", {"points", "slack"});
    read(v, "points", c.validation_points, "validate");
    read(v, "slack", c.validation_slack, "validate");
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    check_keys(s, "search", {"per_dim", "samples"});
    read(s, "per_dim", c.search_per_dim, "search");
    read(s, "samples", c.search_samples, "search");
  }

  // Range checks.
  const Box domain(c.system.lower, c.system.upper);
  try {
    c.sim.validate(domain);
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.levels.verify.max_boxes < 1) throw ConfigError("verify.max_boxes must be at least 1");
  if (!(c.levels.verify.min_width_fraction > 0.0 && c.levels.verify.min_width_fraction < 1.0)) {
    throw ConfigError("verify.min_width_fraction must lie in (0, 1)");
  }
  if (!(c.levels.relative_tolerance > 0.0 && c.levels.relative_tolerance < 1.0)) throw ConfigError("verify.relative_tolerance must lie in (0, 1)");
  if (!(c.levels.probe_floor_fraction > 0.0 && c.levels.probe_floor_fraction < 1.0)) {
    throw ConfigError("verify.probe_floor_fraction must lie in (0, 1)");
  }
  if (!(c.provisional_fraction > 0.0 && c.provisional_fraction < 1.0)) throw ConfigError("verify.provisional_fraction must lie in (0, 1)");
  if (c.epsilon && !(*c.epsilon > 0.0)) throw ConfigError("verify.epsilon must be positive");
  if (c.zeta && !(*c.zeta > 0.0)) throw ConfigError("verify.zeta must be positive");
  if (c.heatmap_resolution.size() != c.system.n) throw ConfigError("heatmap.resolution needs one entry per dimension");
  for (std::size_t r : c.heatmap_resolution) {
    if (r == 0) throw ConfigError("heatmap.resolution entries must be positive");
  }
  if (c.validation_points < 1) throw ConfigError("validate.points must be at least 1");
  if (!(c.validation_slack >= 0.0)) throw ConfigError("validate.slack must be non-negative");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace zubov
