#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "zubov/linlyap.hpp"
#include "zubov/net.hpp"
#include "zubov/network_enclosure.hpp"
#include "zubov/sim.hpp"
#include "zubov/system.hpp"
#include "zubov/verify.hpp"

namespace zubov {

struct QuadraticOptions {
  LevelSearchOptions levels;
  /// Defaults to the identity.
  std::optional<Eigen::MatrixXd> Q;
  /// Defaults to default_epsilon(Q).
  std::optional<double> epsilon;
};

/// linearize -> solve_stochastic_lyapunov -> find_local_level -> find_largest_level
/// (LV <= -epsilon on {c_local <= V <= c}). Throws LyapunovError or
/// LevelSearchError from the failing stage.
QuadraticCertificate certify_quadratic(const StochasticSystem& sys, const QuadraticOptions& options);

/// Quadratic part (P, c1, c2) and neural part (W, beta1, beta2, zeta) with
/// the outcomes of the four conditions the probability bound rests on.
struct CompositeCertificate {
  Eigen::MatrixXd P;
  double c1 = 0.0;
  double c2 = 0.0;
  std::string checkpoint;
  NetworkPtr W;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double zeta = 0.0;
  /// LV <= -epsilon on {c_local <= V <= c2}, from the quadratic stage.
  VerifyOutcome quadratic_outcome;
  /// LW <= -zeta on {beta1 <= W <= beta2} (with the level kept inside the domain).
  VerifyOutcome neural_outcome;
  /// {W <= beta1} within {V <= c1}.
  VerifyOutcome inner_inclusion;
  /// {V <= c2} within {W <= beta2}.
  VerifyOutcome outer_inclusion;
  /// Name of the first condition that did not certify, empty when complete.
  std::string failure;

  bool complete() const;
  double V(std::span<const double> x) const;
};

struct CompositeOptions {
  LevelSearchOptions levels;
  /// Defaults to default_zeta of LW over the domain.
  std::optional<double> zeta;
  /// Provisional beta1 for the beta2 search, as a fraction of the smallest W
  /// sampled on the ellipse {V = c2}.
  double provisional_fraction = 0.9;
  std::size_t boundary_samples = 2000;
};

/// find_largest_level(W) -> find_smallest_lower_level -> find_smallest_c1 ->
/// check_inclusion(V^c2 within W^beta2). If the last check fails at the
/// quadratic c2, c2 is lowered once to just under min{V : W >= beta2}. A stage that cannot certify leaves
/// `failure` set and the remaining fields at their defaults; level searches
/// that find nothing are reported the same way rather than thrown.
CompositeCertificate certify_composite(const StochasticSystem& sys, const QuadraticCertificate& quad, NetworkPtr W,
                                       std::string checkpoint, const CompositeOptions& options);

struct NamedCondition {
  std::string name;
  Condition condition;
};

/// The conditions a complete certificate rests on: local_condition,
/// quadratic_annulus, neural_annulus, inner_inclusion, outer_inclusion.
std::vector<NamedCondition> certificate_conditions(const StochasticSystem& sys, const QuadraticCertificate& quad,
                                                   const CompositeCertificate& cert);

class IncompleteCertificate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The bound on the probability of attraction given V(x0), W(x0) and the
/// certificate constants, clamped to [0, 1].
double probability_bound(double v, double w, double c1, double c2, double beta1, double beta2);

/// Throws IncompleteCertificate unless cert.complete().
double p_lower_bound(const CompositeCertificate& cert, std::span<const double> x0);

struct Heatmap {
  std::vector<std::size_t> resolution;
  /// Cell centers, row-major with the first coordinate varying fastest.
  std::vector<std::vector<double>> points;
  std::vector<double> p;
};

Heatmap heatmap(const CompositeCertificate& cert, const Box& domain, std::span<const std::size_t> resolution);
void write_heatmap_csv(std::ostream& out, const Heatmap& map);
/// 8-bit grayscale, p = 1 white. Two-dimensional maps only; x2 grows upward.
void write_heatmap_pgm(std::ostream& out, const Heatmap& map);

struct ValidationEntry {
  std::vector<double> point;
  double p = 0.0;
  AttractionEstimate estimate;
  double margin = 0.0;
  /// The 99% upper confidence limit is below p.
  bool red_flag = false;
  /// frequency < p - slack.
  bool below_slack = false;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  double slack = 0.03;
  std::size_t red_flags = 0;
  std::size_t slack_violations = 0;
};

ValidationReport validate_bound(const CompositeCertificate& cert, const StochasticSystem& sys, const SimConfig& cfg,
                                std::span<const std::vector<double>> points, double slack = 0.03);

/// Up to `count` grid points of the domain with W < beta2, spread evenly
/// over the qualifying nodes of a per_dim^n grid.
std::vector<std::vector<double>> points_inside(const CompositeCertificate& cert, const Box& domain, std::size_t count,
                                               std::size_t per_dim = 41);

nlohmann::json to_json(const VerifyOutcome& o);
nlohmann::json to_json(const QuadraticCertificate& q);
nlohmann::json to_json(const CompositeCertificate& c);
nlohmann::json to_json(const ValidationReport& r);
/// Reads the constants and statuses back; the network is loaded from
/// `checkpoint` (resolved relative to `base_dir` when not absolute).
CompositeCertificate composite_from_json(const nlohmann::json& j, const std::string& base_dir);
QuadraticCertificate quadratic_from_json(const nlohmann::json& j);

}  // namespace zubov
