#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "zubov/sim.hpp"

using namespace zubov;

namespace {

StochasticSystem one_d_unstable() {
  return StochasticSystem({parse("x1", 1)}, {Expression::constant(0.0)}, 1, default_weight(1), box1(-2.0, 2.0));
}

}  // namespace

TEST_CASE("normal stream") {
  const NormalStream a(1, 2, 3);
  const NormalStream b(1, 2, 3);
  const NormalStream c(1, 2, 4);
  CHECK(a(17) == b(17));
  CHECK(a(17) != c(17));
  double sum = 0.0;
  double sq = 0.0;
  const int count = 200000;
  for (int k = 0; k < count; ++k) {
    const double z = a(static_cast<std::uint64_t>(k));
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / count) < 0.01);
  CHECK(std::fabs(sq / count - 1.0) < 0.02);
}

TEST_CASE("deterministic paths") {
  SimConfig cfg;
  SUBCASE("exponential decay enters the ball on time") {
    const std::vector<double> x0{1.0};
    std::vector<double> traj;
    const PathResult r = simulate_path(one_d_oracle(), x0, cfg, 0, 0, &traj);
    CHECK(r.status == PathStatus::Converged);
    CHECK(std::fabs(r.time - std::log(100.0)) <= 5.0 * cfg.dt);
    // Closed form 0.05 (1 - e^{-2t}) up to the entry time.
    CHECK(r.weight_integral == doctest::Approx(0.05 * (1.0 - std::exp(-2.0 * r.time))).epsilon(2e-3));
    REQUIRE(traj.size() == 2 * (r.steps + 1));
    for (std::size_t k = 0; k <= r.steps; k += 500) CHECK(std::fabs(traj[2 * k + 1] - std::exp(-traj[2 * k])) <= 5.0 * cfg.dt);
  }
  SUBCASE("origin converges immediately") {
    const PathResult r = simulate_path(van_der_pol(), std::vector<double>{0.0, 0.0}, cfg, 0, 0);
    CHECK(r.status == PathStatus::Converged);
    CHECK(r.time == 0.0);
    CHECK(r.weight_integral == 0.0);
  }
  SUBCASE("Van der Pol without noise: inside the cycle converges, outside diverges") {
    const StochasticSystem plain = van_der_pol().without_noise();
    CHECK(simulate_path(plain, std::vector<double>{0.5, 0.5}, cfg, 0, 0).status == PathStatus::Converged);
    CHECK(simulate_path(plain, std::vector<double>{0.0, 3.4}, cfg, 0, 0).status == PathStatus::Diverged);
  }
  SUBCASE("timeouts") {
    SimConfig short_cfg = cfg;
    short_cfg.horizon = 0.5;
    const PathResult r = simulate_path(one_d_oracle(), std::vector<double>{1.0}, short_cfg, 0, 0);
    CHECK(r.status == PathStatus::Timeout);
    CHECK(r.time == doctest::Approx(0.5));
  }
}

TEST_CASE("reproducible noisy paths") {
  SimConfig cfg;
  cfg.seed = 77;
  std::vector<double> a;
  std::vector<double> b;
  const PathResult ra = simulate_path(van_der_pol(), std::vector<double>{1.0, -1.0}, cfg, 3, 5, &a);
  const PathResult rb = simulate_path(van_der_pol(), std::vector<double>{1.0, -1.0}, cfg, 3, 5, &b);
  CHECK(a == b);
  CHECK(ra.weight_integral == rb.weight_integral);
  std::vector<double> c;
  simulate_path(van_der_pol(), std::vector<double>{1.0, -1.0}, cfg, 3, 6, &c);
  CHECK(a != c);
}

TEST_CASE("value estimates") {
  SimConfig cfg;
  const std::vector<double> one{1.0};
  const double exact = 1.0 - std::exp(-0.05);
  const double w = estimate_value(one_d_oracle(), one, cfg).w_hat;
  CHECK(std::fabs(w - exact) <= 2e-3);
  SimConfig half = cfg;
  half.dt = cfg.dt / 2.0;
  CHECK(std::fabs(estimate_value(one_d_oracle(), one, half).w_hat - w) <= 1e-3);

  CHECK(estimate_value(van_der_pol(), std::vector<double>{0.0, 0.0}, cfg).w_hat == 0.0);
  CHECK(estimate_value(one_d_unstable(), one, cfg).w_hat == 1.0);

  SimConfig noisy = cfg;
  noisy.seed = 3;
  noisy.value_samples = 20;
  const ValueSample s = estimate_value(van_der_pol(), std::vector<double>{1.0, 1.0}, noisy);
  CHECK(s.w_hat > 0.0);
  CHECK(s.w_hat < 1.0);
  CHECK(s.w_hat == estimate_value(van_der_pol(), std::vector<double>{1.0, 1.0}, noisy).w_hat);
}

TEST_CASE("attraction estimates") {
  SimConfig cfg;
  cfg.probability_samples = 200;
  const AttractionEstimate origin = estimate_attraction(van_der_pol(), std::vector<double>{0.0, 0.0}, cfg);
  CHECK(origin.frequency == 1.0);
  const AttractionEstimate lin = estimate_attraction(stable_linear(), std::vector<double>{1.5, -1.5}, cfg);
  CHECK(lin.frequency == 1.0);
  CHECK(lin.converged == 200);
  const AttractionEstimate away = estimate_attraction(one_d_unstable(), std::vector<double>{1.0}, cfg);
  CHECK(away.frequency == 0.0);
  CHECK(away.lower == 0.0);
  CHECK(away.upper > 0.0);
}

TEST_CASE("Clopper-Pearson limits") {
  // Closed forms at the extremes: upper = 1 - (a/2)^(1/n) for k = 0.
  const auto zero = clopper_pearson(0, 10, 0.99);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == doctest::Approx(1.0 - std::pow(0.005, 0.1)).epsilon(1e-10));
  const auto all = clopper_pearson(10, 10, 0.99);
  CHECK(all.first == doctest::Approx(std::pow(0.005, 0.1)).epsilon(1e-10));
  CHECK(all.second == 1.0);

  const auto mid = clopper_pearson(50, 100);
  CHECK(mid.first < 0.5);
  CHECK(mid.second > 0.5);
  const auto big = clopper_pearson(5000, 10000);
  const double ratio = (mid.second - mid.first) / (big.second - big.first);
  CHECK(ratio > 9.0);
  CHECK(ratio < 11.0);
  CHECK_THROWS(clopper_pearson(11, 10));
}

TEST_CASE("grids and datasets") {
  CHECK(grid_points(box2(-1, 1, -1, 1), 21, 2000).size() == 441);
  CHECK(grid_points(box2(-1, 1, -1, 1), 21, 100).size() == 100);
  const auto g = grid_points(box1(-2, 2), 5, 2000);
  REQUIRE(g.size() == 5);
  CHECK(g.front()[0] == -2.0);
  CHECK(g.back()[0] == 2.0);

  SimConfig cfg;
  cfg.value_samples = 4;
  const auto data = generate_value_dataset(one_d_oracle(), cfg, 5, 2000);
  REQUIRE(data.size() == 5);
  for (const auto& s : data) CHECK(std::fabs(s.w_hat - (1.0 - std::exp(-0.05 * s.point[0] * s.point[0]))) <= 2e-3);
  std::stringstream io;
  write_dataset_csv(io, data);
  const auto back = read_dataset_csv(io, 1);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].point == data[i].point);
    CHECK(back[i].w_hat == data[i].w_hat);
  }
  std::stringstream bad("x1,w_hat\n0.5,0.1,0.3\n");
  CHECK_THROWS(read_dataset_csv(bad, 1));
}

TEST_CASE("configuration validation") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate(box1(-1, 1)));
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(box1(-1, 1)), std::invalid_argument);
  cfg = SimConfig{};
  cfg.conv_radius = 5.0;
  CHECK_THROWS_AS(cfg.validate(box1(-1, 1)), std::invalid_argument);
}
