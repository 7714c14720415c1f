#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "zubov/proa.hpp"

using namespace zubov;

namespace {

VerifyOutcome certified() {
  VerifyOutcome o;
  o.status = VerifyStatus::Certified;
  return o;
}

// V = |x|^2 with W constant, so the branch is fixed by the constant.
CompositeCertificate synthetic(double w_constant) {
  auto net = std::make_shared<NeuralFunction>(std::vector<std::size_t>{2, 1});
  net->bias(0)[0] = w_constant;
  CompositeCertificate c;
  c.P = Eigen::MatrixXd::Identity(2, 2);
  c.c1 = 0.2;
  c.c2 = 1.0;
  c.W = net;
  c.beta1 = 0.1;
  c.beta2 = 0.5;
  c.zeta = 1e-4;
  c.quadratic_outcome = certified();
  c.neural_outcome = certified();
  c.inner_inclusion = certified();
  c.outer_inclusion = certified();
  return c;
}

}  // namespace

TEST_CASE("probability bound branches") {
  const double c1 = 0.4, c2 = 2.0, b1 = 0.2, b2 = 0.8;
  CHECK(probability_bound(0.0, 0.0, c1, c2, b1, b2) == 1.0);
  // W = beta2: the product vanishes.
  CHECK(probability_bound(1.0, b2, c1, c2, b1, b2) == doctest::Approx(0.5));
  CHECK(probability_bound(2.5, b2, c1, c2, b1, b2) == 0.0);
  // W < beta1 and V = c1.
  CHECK(probability_bound(c1, 0.1, c1, c2, b1, b2) == doctest::Approx(1.0 - c1 / c2));
  CHECK(probability_bound(0.1, b2 + 1e-9, c1, c2, b1, b2) == 0.0);
  CHECK(probability_bound(3.0, 0.5, c1, c2, b1, b2) == doctest::Approx((1.0 - 0.5 / b2) * (1.0 - c1 / c2)));
  CHECK(probability_bound(5.0, 0.1, c1, c2, b1, b2) == 0.0);
}

TEST_CASE("probability bound properties") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double c2 = 0.5 + 3.0 * u(rng);
    const double c1 = c2 * (0.05 + 0.9 * u(rng));
    const double b2 = 0.2 + 0.8 * u(rng);
    const double b1 = b2 * (0.05 + 0.9 * u(rng));
    const double v = 5.0 * u(rng);
    const double w = 1.5 * u(rng);
    const double p = probability_bound(v, w, c1, c2, b1, b2);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    if (w < b2 && v < c2) CHECK(p > 0.0);

    // On {W = beta1} inside V^{c1} the quadratic branch dominates the product.
    const double v_edge = c1 * u(rng);
    CHECK(1.0 - v_edge / c2 >= (1.0 - b1 / b2) * (1.0 - c1 / c2));
    CHECK(probability_bound(v_edge, b1, c1, c2, b1, b2) == doctest::Approx(1.0 - v_edge / c2));

    // Monotone in V below beta1.
    const double v2 = v + u(rng);
    const double w_in = b1 * u(rng) * 0.99;
    CHECK(probability_bound(v, w_in, c1, c2, b1, b2) >= probability_bound(v2, w_in, c1, c2, b1, b2));
  }
}

TEST_CASE("incomplete certificates are refused") {
  CompositeCertificate c = synthetic(0.05);
  CHECK(c.complete());
  CHECK(p_lower_bound(c, std::vector<double>{0.0, 0.0}) == 1.0);
  c.outer_inclusion.status = VerifyStatus::Unknown;
  CHECK_FALSE(c.complete());
  CHECK_THROWS_AS(p_lower_bound(c, std::vector<double>{0.0, 0.0}), IncompleteCertificate);
  CompositeCertificate d = synthetic(0.05);
  d.c1 = 2.0;
  CHECK_FALSE(d.complete());
}

TEST_CASE("heatmap") {
  const std::vector<std::size_t> res{3, 3};
  const Heatmap map = heatmap(synthetic(0.05), box2(-1, 1, -1, 1), res);
  REQUIRE(map.p.size() == 9);
  CHECK(map.points[4][0] == doctest::Approx(0.0));
  CHECK(map.points[4][1] == doctest::Approx(0.0));
  CHECK(map.p[4] == 1.0);
  CHECK(map.points[1][0] == doctest::Approx(0.0));
  CHECK(map.points[1][1] == doctest::Approx(-2.0 / 3.0));
  CHECK(map.p[0] == doctest::Approx(1.0 - 8.0 / 9.0));
  CHECK(map.p[1] == doctest::Approx(1.0 - 4.0 / 9.0));

  const Heatmap outside = heatmap(synthetic(0.9), box2(-1, 1, -1, 1), res);
  for (double p : outside.p) CHECK(p == 0.0);

  std::ostringstream csv;
  write_heatmap_csv(csv, map);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "x1,x2,p");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 9);

  const std::vector<std::size_t> wide{4, 2};
  const Heatmap rect = heatmap(synthetic(0.05), box2(-1, 1, -1, 1), wide);
  std::ostringstream pgm;
  write_heatmap_pgm(pgm, rect);
  const std::string img = pgm.str();
  const std::string header = "P5\n4 2\n255\n";
  REQUIRE(img.size() == header.size() + 8);
  CHECK(img.substr(0, header.size()) == header);
  CHECK_THROWS_AS(write_heatmap_pgm(pgm, heatmap(synthetic(0.05), box1(-1, 1), std::vector<std::size_t>{3})),
                  std::invalid_argument);
}

TEST_CASE("points inside the certified set") {
  const auto pts = points_inside(synthetic(0.05), box2(-1, 1, -1, 1), 20);
  CHECK(pts.size() == 20);
  CHECK(points_inside(synthetic(0.9), box2(-1, 1, -1, 1), 20).empty());
}

TEST_CASE("certificate JSON round trip") {
  CompositeCertificate c = synthetic(0.05);
  const auto dir = std::filesystem::temp_directory_path() / "zubov_test_proa";
  std::filesystem::create_directories(dir);
  c.W->save((dir / "w.json").string());
  c.checkpoint = "w.json";
  const nlohmann::json j = to_json(c);
  CHECK(j.at("complete").get<bool>());
  const CompositeCertificate back = composite_from_json(j, dir.string());
  CHECK(back.complete());
  CHECK(back.c1 == c.c1);
  CHECK(back.beta2 == c.beta2);
  CHECK(back.P == c.P);
  CHECK(to_json(back) == j);
  std::filesystem::remove_all(dir);
}

TEST_CASE("quadratic certificate for the linear system stops just below the cap") {
  const StochasticSystem sys = stable_linear();
  const QuadraticCertificate q = certify_quadratic(sys, QuadraticOptions{});
  CHECK(q.solved);
  CHECK(q.local_verified);
  CHECK(q.extended_verified);
  const double cap = ellipsoid_cap(q.P, sys.domain());
  CHECK(q.c2 < cap);
  CHECK(q.c2 >= cap / (1.0 + LevelSearchOptions{}.relative_tolerance));
  CHECK(q.c_local == q.c2);
  const QuadraticCertificate back = quadratic_from_json(to_json(q));
  CHECK(back.P == q.P);
  CHECK(back.c2 == q.c2);
}

TEST_CASE("an untrained network yields a named failure") {
  const StochasticSystem sys = van_der_pol();
  const QuadraticCertificate q = certify_quadratic(sys, QuadraticOptions{});
  auto zero = std::make_shared<NeuralFunction>(std::vector<std::size_t>{2, 10, 10, 10, 1});
  const CompositeCertificate c = certify_composite(sys, q, zero, "zero.json", CompositeOptions{});
  CHECK_FALSE(c.complete());
  CHECK_FALSE(c.failure.empty());
}

TEST_CASE("validation against simulation") {
  CompositeCertificate c = synthetic(0.05);
  SimConfig cfg;
  cfg.probability_samples = 100;
  const std::vector<std::vector<double>> pts{{0.0, 0.0}, {0.5, 0.0}};
  const ValidationReport r = validate_bound(c, stable_linear(), cfg, pts);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].p == 1.0);
  CHECK(r.entries[0].estimate.frequency == 1.0);
  CHECK(r.red_flags == 0);
  CHECK(r.slack_violations == 0);
}
