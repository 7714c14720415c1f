#include "zubov/sim.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>

namespace zubov {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

void SimConfig::validate(const Box& domain) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double r = domain.radius();
  if (!(conv_radius > 0.0 && conv_radius < r)) throw std::invalid_argument("conv_radius must lie in (0, domain radius)");
  if (!(divergence_radius(domain) > r)) throw std::invalid_argument("div_radius must exceed the domain radius");
  if (value_samples < 1 || probability_samples < 1) throw std::invalid_argument("sample counts must be at least 1");
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t point, std::uint64_t path)
    : key_(mix64(mix64(mix64(seed) ^ point) ^ path)) {}

double NormalStream::uniform(std::uint64_t counter) const {
  // 53 random bits, shifted off zero so the log below stays finite.
  return (static_cast<double>(mix64(key_ + counter * 0xd1b54a32d192ed03ULL) >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::operator()(std::uint64_t counter) const {
  // Box-Muller on the pair (2c, 2c+1); the cosine branch only.
  const double u1 = uniform(2 * counter);
  const double u2 = uniform(2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::Converged: return "converged";
    case PathStatus::Diverged: return "diverged";
    case PathStatus::Timeout: return "timeout";
  }
  return "timeout";
}

PathResult simulate_path(const StochasticSystem& sys, std::span<const double> x0, const SimConfig& cfg,
                         std::uint64_t point, std::uint64_t path, std::vector<double>* trajectory) {
  const std::size_t n = sys.n();
  const std::size_t m = sys.m();
  if (x0.size() != n) throw std::invalid_argument("initial state has the wrong dimension");
  for (double v : x0) {
    if (!std::isfinite(v)) throw std::invalid_argument("initial state must be finite");
  }
  const double r_div = cfg.divergence_radius(sys.domain());
  const double sqrt_dt = std::sqrt(cfg.dt);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  const NormalStream noise(cfg.seed, point, path);

  PathResult res;
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> packed(n + n * m + 1);
  std::vector<double> scratch;
  std::vector<double> xi(m);

  auto record = [&](double t) {
    if (!trajectory) return;
    trajectory->push_back(t);
    trajectory->insert(trajectory->end(), x.begin(), x.end());
  };
  auto finish = [&](PathStatus s, std::size_t k) {
    res.status = s;
    res.steps = k;
    res.time = static_cast<double>(k) * cfg.dt;
    res.final_state = x;
    return res;
  };

  record(0.0);
  if (norm2(x) < cfg.conv_radius) return finish(PathStatus::Converged, 0);
  sys.dynamics(x, packed, scratch);
  double g_prev = packed.back();

  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t j = 0; j < m; ++j) xi[j] = noise(k * m + j);
    for (std::size_t i = 0; i < n; ++i) {
      double dx = packed[i] * cfg.dt;
      for (std::size_t j = 0; j < m; ++j) dx += packed[n + i * m + j] * sqrt_dt * xi[j];
      x[i] += dx;
    }
    record(static_cast<double>(k + 1) * cfg.dt);
    const double r = norm2(x);
    if (!std::isfinite(r)) {
      res.diagnostic = "non-finite state";
      return finish(PathStatus::Diverged, k + 1);
    }
    if (r > r_div) return finish(PathStatus::Diverged, k + 1);
    sys.dynamics(x, packed, scratch);
    const double g = packed.back();
    res.weight_integral += 0.5 * (g_prev + g) * cfg.dt;
    g_prev = g;
    if (r < cfg.conv_radius) return finish(PathStatus::Converged, k + 1);
  }
  return finish(PathStatus::Timeout, steps);
}

ValueSample estimate_value(const StochasticSystem& sys, std::span<const double> y, const SimConfig& cfg,
                           std::uint64_t point) {
  ValueSample s;
  s.point.assign(y.begin(), y.end());
  double sum = 0.0;
  for (std::size_t p = 0; p < cfg.value_samples; ++p) {
    const PathResult r = simulate_path(sys, y, cfg, point, p);
    if (r.status != PathStatus::Diverged) sum += std::exp(-r.weight_integral);
  }
  s.w_hat = 1.0 - sum / static_cast<double>(cfg.value_samples);
  return s;
}

std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence) {
  if (n == 0 || k > n) throw std::invalid_argument("clopper_pearson needs 0 <= k <= n and n >= 1");
  const double alpha = 1.0 - confidence;
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  double lo = 0.0;
  double hi = 1.0;
  if (k > 0) lo = boost::math::quantile(boost::math::beta_distribution<double>(kd, nd - kd + 1.0), alpha / 2.0);
  if (k < n) hi = boost::math::quantile(boost::math::beta_distribution<double>(kd + 1.0, nd - kd), 1.0 - alpha / 2.0);
  return {lo, hi};
}

AttractionEstimate estimate_attraction(const StochasticSystem& sys, std::span<const double> x0, const SimConfig& cfg,
                                       std::uint64_t point, std::optional<std::size_t> samples) {
  AttractionEstimate e;
  e.samples = samples.value_or(cfg.probability_samples);
  for (std::size_t p = 0; p < e.samples; ++p) {
    if (simulate_path(sys, x0, cfg, point, p).status == PathStatus::Converged) ++e.converged;
  }
  e.frequency = static_cast<double>(e.converged) / static_cast<double>(e.samples);
  std::tie(e.lower, e.upper) = clopper_pearson(e.converged, e.samples);
  return e;
}

std::vector<std::vector<double>> grid_points(const Box& box, std::size_t per_dim, std::size_t max_points) {
  const std::size_t n = box.dim();
  if (per_dim < 1 || max_points < 1) throw std::invalid_argument("grid sizes must be positive");
  auto total = [&](std::size_t k) {
    double t = 1.0;
    for (std::size_t i = 0; i < n; ++i) t *= static_cast<double>(k);
    return t;
  };
  while (per_dim > 1 && total(per_dim) > static_cast<double>(max_points)) --per_dim;

  std::vector<std::vector<double>> pts;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = per_dim == 1 ? box[i].mid()
                          : box[i].lo + box[i].width() * static_cast<double>(idx[i]) / static_cast<double>(per_dim - 1);
    }
    pts.push_back(std::move(p));
    std::size_t d = 0;
    while (d < n && ++idx[d] == per_dim) idx[d++] = 0;
    if (d == n) break;
  }
  return pts;
}

std::vector<ValueSample> generate_value_dataset(const StochasticSystem& sys, const SimConfig& cfg, std::size_t per_dim,
                                                std::size_t max_points) {
  cfg.validate(sys.domain());
  const auto pts = grid_points(sys.domain(), per_dim, max_points);
  std::vector<ValueSample> data;
  data.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) data.push_back(estimate_value(sys, pts[i], cfg, i));
  return data;
}

void write_dataset_csv(std::ostream& out, std::span<const ValueSample> data) {
  const std::size_t n = data.empty() ? 0 : data.front().point.size();
  for (std::size_t i = 0; i < n; ++i) out << "x" << i + 1 << ",";
  out << "w_hat\n";
  out << std::setprecision(17);
  for (const auto& s : data) {
    for (double v : s.point) out << v << ",";
    out << s.w_hat << "\n";
  }
}

std::vector<ValueSample> read_dataset_csv(std::istream& in, std::size_t n) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: missing header");
  std::vector<ValueSample> data;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::runtime_error("dataset: bad number on row " + std::to_string(row));
      }
    }
    if (vals.size() != n + 1) throw std::runtime_error("dataset: expected " + std::to_string(n + 1) + " columns on row " + std::to_string(row));
    ValueSample s;
    s.w_hat = vals.back();
    vals.pop_back();
    s.point = std::move(vals);
    data.push_back(std::move(s));
  }
  return data;
}

void write_trajectory_csv(std::ostream& out, std::span<const double> trajectory, std::size_t n) {
  out << "t";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i + 1;
  out << "\n" << std::setprecision(10);
  for (std::size_t k = 0; k + n < trajectory.size(); k += n + 1) {
    out << trajectory[k];
    for (std::size_t i = 1; i <= n; ++i) out << "," << trajectory[k + i];
    out << "\n";
  }
}

std::optional<NoiseStabilizedPoint> search_noise_stabilized(const StochasticSystem& sys, const SimConfig& cfg,
                                                            std::size_t per_dim, std::size_t samples,
                                                            double good_enough) {
  const StochasticSystem plain = sys.without_noise();
  const auto pts = grid_points(sys.domain(), per_dim, std::numeric_limits<std::size_t>::max());
  std::optional<NoiseStabilizedPoint> best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (simulate_path(plain, pts[i], cfg, i, 0).status != PathStatus::Diverged) continue;
    const AttractionEstimate e = estimate_attraction(sys, pts[i], cfg, i, samples);
    if (!best || e.frequency > best->estimate.frequency) best = NoiseStabilizedPoint{pts[i], e};
    if (e.frequency >= good_enough) break;
  }
  return best;
}

}  // namespace zubov
