#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "zubov/net.hpp"
#include "zubov/proa.hpp"
#include "zubov/sim.hpp"
#include "zubov/system.hpp"
#include "zubov/verify.hpp"

namespace zubov {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// System definition: expression strings over x1..xn.
struct SystemSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::string> f;
  /// n rows of m entries.
  std::vector<std::vector<std::string>> sigma;
  /// Empty selects 0.1 * (x1^2 + ... + xn^2).
  std::string g;
  std::vector<double> lower;
  std::vector<double> upper;
  double positivity_radius = 1e-2;
};

/// Throws ConfigError on malformed keys or expressions, SystemError when
/// the parsed system violates its invariants.
SystemSpec parse_system_spec(const nlohmann::json& j);
StochasticSystem build_system(const SystemSpec& spec);

struct RunConfig {
  SystemSpec system;
  SimConfig sim;
  TrainConfig train;
  LevelSearchOptions levels;
  std::optional<Eigen::MatrixXd> Q;
  std::optional<double> epsilon;
  std::optional<double> zeta;
  double provisional_fraction = 0.9;
  std::vector<std::size_t> heatmap_resolution;
  std::size_t validation_points = 20;
  double validation_slack = 0.03;
  std::size_t search_per_dim = 11;
  std::size_t search_samples = 1000;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  QuadraticOptions quadratic_options() const;
  CompositeOptions composite_options() const;
};

/// `base_dir` resolves a relative "system_file" entry.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

}  // namespace zubov
