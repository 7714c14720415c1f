#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zubov/expr.hpp"
#include "zubov/interval.hpp"
#include "zubov/program.hpp"
#include "zubov/system.hpp"

namespace zubov {

class SmtContext;

/// A scalar function of the state that can be evaluated at points and
/// soundly enclosed over boxes. Implementations must be safe to call
/// concurrently.
class BoxFunction {
 public:
  virtual ~BoxFunction() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual Interval enclose(const Box& box) const = 0;
  /// SMT-LIB2 term for this function; may register auxiliary definitions in `ctx`.
  virtual std::string smt_term(SmtContext& ctx) const = 0;
};

using BoxFunctionPtr = std::shared_ptr<const BoxFunction>;

class ExpressionFunction final : public BoxFunction {
 public:
  ExpressionFunction(Expression e, std::size_t n);
  std::size_t dim() const override { return n_; }
  double value(std::span<const double> x) const override;
  Interval enclose(const Box& box) const override;
  std::string smt_term(SmtContext& ctx) const override;
  const Expression& expression() const { return expr_; }

 private:
  Expression expr_;
  std::size_t n_;
  Program program_;
};

BoxFunctionPtr make_function(const Expression& e, std::size_t n);

/// lo <= fn(x) <= hi
struct RangeConstraint {
  BoxFunctionPtr fn;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool satisfied(std::span<const double> x) const {
    const double v = fn->value(x);
    return lo <= v && v <= hi;
  }
};

/// "target <= bound" (or "< bound" when strict) for every x in the domain
/// satisfying every constraint of the region.
struct Condition {
  BoxFunctionPtr target;
  std::vector<RangeConstraint> region;
  double bound = 0.0;
  bool strict = false;
  Box domain;
  std::string description;

  bool region_contains(std::span<const double> x) const;
  bool threshold_holds(double target_value) const { return strict ? target_value < bound : target_value <= bound; }
};

enum class VerifyStatus { Certified, Falsified, Unknown };

const char* to_string(VerifyStatus s);

struct VerifyOutcome {
  VerifyStatus status = VerifyStatus::Unknown;
  /// Point in the region where the threshold fails (Falsified only).
  std::vector<double> witness;
  /// Smallest box that could be neither discharged nor refuted (Unknown only).
  std::optional<Box> inconclusive;
  std::size_t boxes = 0;
  std::size_t max_depth = 0;
  double seconds = 0.0;
  std::string reason;

  bool certified() const { return status == VerifyStatus::Certified; }
};

struct VerifyOptions {
  std::size_t max_boxes = 5'000'000;
  /// Boxes narrower than this fraction of the domain's widest side are not split.
  double min_width_fraction = 1e-3;
};

/// Breadth-first interval branch and bound. A box is discharged when a
/// constraint enclosure misses its range or the target enclosure meets the
/// threshold; a box whose midpoint lies in the region and violates the
/// threshold yields Falsified. Anything else is bisected along its widest
/// side until the width floor, where the search stops with Unknown.
VerifyOutcome check(const Condition& cond, const VerifyOptions& options);

// Level-constant search.

class LevelSearchError : public std::runtime_error {
 public:
  LevelSearchError(const std::string& what, VerifyOutcome last) : std::runtime_error(what), last_(std::move(last)) {}
  const VerifyOutcome& last_outcome() const { return last_; }

 private:
  VerifyOutcome last_;
};

struct LevelSearchOptions {
  VerifyOptions verify;
  /// Relative bisection tolerance on the level.
  double relative_tolerance = 1e-2;
  /// Lowest probe tried, as a fraction of the upper bound of the search range.
  double probe_floor_fraction = 1e-3;
};

struct LevelProbe {
  double level;
  VerifyStatus status;
};

struct LevelResult {
  double level = 0.0;
  /// Re-check of the condition at `level`.
  VerifyOutcome outcome;
  std::vector<LevelProbe> probes;
};

/// Certifies fn > level on every face of the domain, which keeps the
/// connected component of {fn <= level} around the origin inside the box.
VerifyOutcome check_level_inside_domain(const BoxFunctionPtr& fn, double level, const Box& domain,
                                        const VerifyOptions& options);

/// Largest c <= cap with: {fn <= c} inside the domain and generator <= bound
/// on {lower <= fn <= c}. Throws LevelSearchError when no probe passes.
LevelResult find_largest_level(const BoxFunctionPtr& fn, const BoxFunctionPtr& generator, std::optional<double> lower,
                               double bound, double cap, const Box& domain, const LevelSearchOptions& options);

/// Smallest b < upper with generator <= bound on {b <= fn <= upper}.
/// `known_pass`, when given, is a level already known to pass.
LevelResult find_smallest_lower_level(const BoxFunctionPtr& fn, const BoxFunctionPtr& generator, double upper,
                                      double bound, const Box& domain, const LevelSearchOptions& options,
                                      std::optional<double> known_pass = std::nullopt);

/// Certifies {inner <= a} within {outer <= b} over the domain.
VerifyOutcome check_inclusion(const BoxFunctionPtr& inner, double a, const BoxFunctionPtr& outer, double b,
                              const Box& domain, const VerifyOptions& options);

/// Sound upper bound on max{target(x) : x in region}, by best-first branch and bound.
struct MaximizeResult {
  double upper = 0.0;
  /// Best value attained at a feasible point (lower bound on the maximum).
  double attained = -std::numeric_limits<double>::infinity();
  bool region_empty = false;
  std::size_t boxes = 0;
};

MaximizeResult maximize(const BoxFunctionPtr& target, const std::vector<RangeConstraint>& region, const Box& domain,
                        const VerifyOptions& options, double relative_gap = 1e-3);

struct C1Result {
  double c1 = 0.0;
  MaximizeResult search;
  VerifyOutcome inclusion;
};

/// Smallest c1 with {W <= beta1} within {V <= c1}: an upper bound on V over
/// {W <= beta1}, then a certified inclusion check.
C1Result find_smallest_c1(const BoxFunctionPtr& V, const BoxFunctionPtr& W, double beta1, const Box& domain,
                          const VerifyOptions& options);

/// 1e-4 * max |generator| over the domain (enclosures over a fixed 2^8-box
/// partition), floored at 1e-6.
double default_zeta(const BoxFunctionPtr& generator, const Box& domain);

/// Generator L applied to an expression, as a box function.
BoxFunctionPtr expression_generator(const StochasticSystem& sys, const Expression& V);

}  // namespace zubov
