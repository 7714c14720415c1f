#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zubov/system.hpp"

namespace zubov {

struct SimConfig {
  double dt = 1e-3;
  double horizon = 20.0;
  double conv_radius = 1e-2;
  /// 0 selects 10x the domain radius.
  double div_radius = 0.0;
  std::size_t value_samples = 100;
  std::size_t probability_samples = 10000;
  std::uint64_t seed = 0;

  double divergence_radius(const Box& domain) const { return div_radius > 0.0 ? div_radius : 10.0 * domain.radius(); }
  /// Throws std::invalid_argument when a field is out of range for `domain`.
  void validate(const Box& domain) const;
};

/// Counter-based normal variates: the k-th draw of stream (seed, point, path)
/// depends on nothing else, so any evaluation order gives the same numbers.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t point, std::uint64_t path);
  /// Standard normal number `counter` of this stream.
  double operator()(std::uint64_t counter) const;

 private:
  double uniform(std::uint64_t counter) const;
  std::uint64_t key_;
};

enum class PathStatus { Converged, Diverged, Timeout };

const char* to_string(PathStatus s);

struct PathResult {
  PathStatus status = PathStatus::Timeout;
  /// Time of the last state (entry time for Converged/Diverged).
  double time = 0.0;
  /// Trapezoidal integral of g along the path up to `time`.
  double weight_integral = 0.0;
  std::size_t steps = 0;
  std::vector<double> final_state;
  std::string diagnostic;
};

/// Euler-Maruyama path from x0 with noise from stream (cfg.seed, point, path).
/// When `trajectory` is given every state is appended as t, x1..xn.
PathResult simulate_path(const StochasticSystem& sys, std::span<const double> x0, const SimConfig& cfg,
                         std::uint64_t point, std::uint64_t path, std::vector<double>* trajectory = nullptr);

struct ValueSample {
  std::vector<double> point;
  double w_hat = 0.0;
};

/// W_hat(y) = 1 - mean exp(-int g) over cfg.value_samples paths; diverged
/// paths contribute 0 to the mean.
ValueSample estimate_value(const StochasticSystem& sys, std::span<const double> y, const SimConfig& cfg,
                           std::uint64_t point = 0);

/// Two-sided Clopper-Pearson interval for k successes out of n trials.
std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence = 0.99);

struct AttractionEstimate {
  std::size_t converged = 0;
  std::size_t samples = 0;
  double frequency = 0.0;
  /// 99% Clopper-Pearson limits.
  double lower = 0.0;
  double upper = 1.0;
};

/// Fraction of cfg.probability_samples paths that enter the convergence ball
/// before the horizon. Timeouts count as failures.
AttractionEstimate estimate_attraction(const StochasticSystem& sys, std::span<const double> x0, const SimConfig& cfg,
                                       std::uint64_t point = 0, std::optional<std::size_t> samples = std::nullopt);

/// Uniform grid over the box with `per_dim` nodes per side, reduced so the
/// total stays at or below `max_points`.
std::vector<std::vector<double>> grid_points(const Box& box, std::size_t per_dim = 21, std::size_t max_points = 2000);

std::vector<ValueSample> generate_value_dataset(const StochasticSystem& sys, const SimConfig& cfg,
                                                std::size_t per_dim = 21, std::size_t max_points = 2000);

void write_dataset_csv(std::ostream& out, std::span<const ValueSample> data);
/// Throws std::runtime_error on malformed rows or a dimension mismatch.
std::vector<ValueSample> read_dataset_csv(std::istream& in, std::size_t n);
/// `trajectory` as produced by simulate_path.
void write_trajectory_csv(std::ostream& out, std::span<const double> trajectory, std::size_t n);

struct NoiseStabilizedPoint {
  std::vector<double> point;
  AttractionEstimate estimate;
};

/// Grid points whose noise-free path diverges, ranked by the attraction
/// frequency with noise on. Returns the best candidate, if any diverges at all.
std::optional<NoiseStabilizedPoint> search_noise_stabilized(const StochasticSystem& sys, const SimConfig& cfg,
                                                            std::size_t per_dim, std::size_t samples,
                                                            double good_enough);

}  // namespace zubov
