// Command-line driver: quad, train, certify, heatmap, validate, export-smt, simulate.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "zubov/config.hpp"
#include "zubov/linlyap.hpp"
#include "zubov/net.hpp"
#include "zubov/network_enclosure.hpp"
#include "zubov/proa.hpp"
#include "zubov/sim.hpp"
#include "zubov/smt.hpp"
#include "zubov/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace zubov;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kUnknown = 3, kFalsified = 4, kNumeric = 5 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_boxes;
  std::optional<double> min_width_fraction;
  std::optional<std::size_t> samples;
  std::string quad_report;
  std::string checkpoint;
  std::string certificate;
  std::vector<double> x0;
  bool search = false;
};

// Failure carrying the exit code and the stage that raised it.
struct StageError : std::runtime_error {
  StageError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

int code_for(const VerifyOutcome& o) { return o.status == VerifyStatus::Falsified ? kFalsified : kUnknown; }

RunConfig load(const Options& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.sim.seed = *opt.seed;
    cfg.train.seed = *opt.seed;
  }
  if (opt.max_boxes) cfg.levels.verify.max_boxes = *opt.max_boxes;
  if (opt.min_width_fraction) cfg.levels.verify.min_width_fraction = *opt.min_width_fraction;
  if (opt.samples) cfg.sim.probability_samples = *opt.samples;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  fs::create_directories(cfg.output_dir);
  return cfg;
}

std::string in_out(const RunConfig& cfg, const std::string& given, const std::string& name) {
  return given.empty() ? (fs::path(cfg.output_dir) / name).string() : given;
}

json metadata(const Options& opt, const RunConfig& cfg, double seconds) {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"config", opt.config}, {"seed", cfg.seed}, {"generated_at", buf}, {"wall_seconds", seconds}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CompositeCertificate load_certificate(const RunConfig& cfg, const Options& opt) {
  const std::string path = in_out(cfg, opt.certificate, "certificate.json");
  CompositeCertificate cert;
  try {
    cert = composite_from_json(read_json(path), fs::path(path).parent_path().string());
  } catch (const std::runtime_error& e) {
    throw StageError(kConfig, e.what());
  }
  if (!cert.complete()) {
    throw StageError(kConfig, "certificate " + path + " is incomplete (" +
                                  (cert.failure.empty() ? std::string("inconsistent constants") : cert.failure) +
                                  "); the bound is only defined for a complete certificate");
  }
  return cert;
}

int cmd_quad(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  QuadraticCertificate q;
  try {
    q = certify_quadratic(sys, cfg.quadratic_options());
  } catch (const LyapunovError& e) {
    throw StageError(kNumeric, std::string("quad/lyapunov: ") + e.what());
  } catch (const LevelSearchError& e) {
    throw StageError(code_for(e.last_outcome()), std::string("quad/level search: ") + e.what() + " (" + e.last_outcome().reason + ")");
  }
  json report = to_json(q);
  report["metadata"] = metadata(opt, cfg, seconds_since(t0));
  const std::string path = (fs::path(cfg.output_dir) / "quadratic.json").string();
  write_json(path, report);
  std::cout << "P =\n" << q.P << "\nc_local = " << q.c_local << "\nc2 = " << q.c2 << "\nwrote " << path << "\n";
  return kOk;
}

int cmd_train(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  const fs::path out(cfg.output_dir);

  std::vector<ValueSample> data;
  if (cfg.train.data_per_dim > 0) {
    data = generate_value_dataset(sys, cfg.sim, cfg.train.data_per_dim, cfg.train.data_max_points);
    std::ofstream csv(out / "dataset.csv");
    write_dataset_csv(csv, data);
    std::cout << "dataset: " << data.size() << " points\n";
  }
  auto save_checkpoint = [&](std::size_t epoch, const NeuralFunction& net) {
    net.save((out / ("checkpoint_epoch" + std::to_string(epoch) + ".json")).string());
  };
  const TrainResult res = train(sys, cfg.train, data, save_checkpoint);
  res.net.save((out / "checkpoint.json").string());
  {
    std::ofstream csv(out / "loss_history.csv");
    csv << "epoch,total,residual,boundary,data\n";
    csv.precision(10);
    for (std::size_t e = 0; e < res.history.size(); ++e) {
      const auto& h = res.history[e];
      csv << e << "," << h.total << "," << h.residual << "," << h.boundary << "," << h.data << "\n";
    }
  }
  const double held_out = mean_squared_residual(res.net, sys, uniform_points(sys.domain(), 2000, cfg.seed + 1));
  json report{{"epochs_run", res.history.size()},
              {"final_loss", res.history.empty() ? 0.0 : res.history.back().total},
              {"held_out_mean_residual_squared", held_out},
              {"diverged", res.diverged},
              {"message", res.message},
              {"metadata", metadata(opt, cfg, seconds_since(t0))}};
  write_json((out / "train_report.json").string(), report);
  std::cout << "held-out mean residual^2 = " << held_out << "\n";
  if (res.diverged) throw StageError(kNumeric, "train: " + res.message + "; last good checkpoint written");
  return kOk;
}

int cmd_certify(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  const QuadraticCertificate quad = quadratic_from_json(read_json(in_out(cfg, opt.quad_report, "quadratic.json")));
  const std::string ckpt = in_out(cfg, opt.checkpoint, "checkpoint.json");
  std::shared_ptr<NeuralFunction> net;
  try {
    net = std::make_shared<NeuralFunction>(NeuralFunction::load(ckpt));
  } catch (const std::runtime_error& e) {
    throw StageError(kConfig, std::string("certify: ") + e.what());
  }
  const CompositeCertificate cert =
      certify_composite(sys, quad, net, fs::absolute(ckpt).string(), cfg.composite_options());
  json report = to_json(cert);
  report["metadata"] = metadata(opt, cfg, seconds_since(t0));
  const std::string path = (fs::path(cfg.output_dir) / "certificate.json").string();
  write_json(path, report);
  std::cout << "beta1 = " << cert.beta1 << "\nbeta2 = " << cert.beta2 << "\nc1 = " << cert.c1 << "\nc2 = " << cert.c2
            << "\nzeta = " << cert.zeta << "\nwrote " << path << "\n";
  if (!cert.complete()) {
    const VerifyOutcome* failing = &cert.outer_inclusion;
    for (const VerifyOutcome* o : {&cert.quadratic_outcome, &cert.neural_outcome, &cert.inner_inclusion, &cert.outer_inclusion}) {
      if (!o->certified()) {
        failing = o;
        break;
      }
    }
    throw StageError(code_for(*failing), "certify: incomplete certificate, failing condition: " + cert.failure);
  }
  return kOk;
}

int cmd_heatmap(const Options& opt) {
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  const CompositeCertificate cert = load_certificate(cfg, opt);
  const Heatmap map = heatmap(cert, sys.domain(), cfg.heatmap_resolution);
  const fs::path out(cfg.output_dir);
  {
    std::ofstream csv(out / "heatmap.csv");
    write_heatmap_csv(csv, map);
  }
  if (sys.n() == 2) {
    std::ofstream pgm(out / "heatmap.pgm", std::ios::binary);
    write_heatmap_pgm(pgm, map);
  }
  std::cout << "wrote " << (out / "heatmap.csv").string() << "\n";
  return kOk;
}

int cmd_validate(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  const CompositeCertificate cert = load_certificate(cfg, opt);
  const auto points = points_inside(cert, sys.domain(), cfg.validation_points);
  const ValidationReport report = validate_bound(cert, sys, cfg.sim, points, cfg.validation_slack);
  json j = to_json(report);
  j["metadata"] = metadata(opt, cfg, seconds_since(t0));
  const std::string path = (fs::path(cfg.output_dir) / "validation.json").string();
  write_json(path, j);
  for (const auto& e : report.entries) {
    std::cout << "x0 = (";
    for (std::size_t i = 0; i < e.point.size(); ++i) std::cout << (i ? ", " : "") << e.point[i];
    std::cout << ")  p = " << e.p << "  frequency = " << e.estimate.frequency << "  99% CI = [" << e.estimate.lower << ", "
              << e.estimate.upper << "]" << (e.red_flag ? "  RED FLAG" : "") << "\n";
  }
  std::cout << "red flags: " << report.red_flags << ", below slack: " << report.slack_violations << "\n";
  return report.red_flags == 0 && report.slack_violations == 0 ? kOk : kFalsified;
}

int cmd_export_smt(const Options& opt) {
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  const QuadraticCertificate quad = quadratic_from_json(read_json(in_out(cfg, opt.quad_report, "quadratic.json")));
  const CompositeCertificate cert = load_certificate(cfg, opt);
  const fs::path dir = fs::path(cfg.output_dir) / "smt";
  fs::create_directories(dir);
  for (const auto& [name, cond] : certificate_conditions(sys, quad, cert)) {
    const fs::path path = dir / (name + ".smt2");
    std::ofstream out(path);
    out << export_smt(cond);
    std::cout << "wrote " << path.string() << "\n";
  }
  return kOk;
}

int cmd_simulate(const Options& opt) {
  const RunConfig cfg = load(opt);
  const StochasticSystem sys = build_system(cfg.system);
  const fs::path out(cfg.output_dir);
  if (opt.search) {
    const auto found = search_noise_stabilized(sys, cfg.sim, cfg.search_per_dim, cfg.search_samples, 0.05);
    if (!found) {
      std::cout << "no grid point has a diverging noise-free path\n";
      return kOk;
    }
    std::cout << "point outside the noise-free attraction region: (";
    for (std::size_t i = 0; i < found->point.size(); ++i) std::cout << (i ? ", " : "") << found->point[i];
    std::cout << ")  attraction frequency with noise = " << found->estimate.frequency << "  99% CI = ["
              << found->estimate.lower << ", " << found->estimate.upper << "]\n";
    return kOk;
  }
  if (opt.x0.size() != sys.n()) throw ConfigError("--x0 needs " + std::to_string(sys.n()) + " comma-separated values");
  std::vector<double> traj;
  const PathResult path = simulate_path(sys, opt.x0, cfg.sim, 0, 0, &traj);
  {
    std::ofstream csv(out / "trajectory.csv");
    write_trajectory_csv(csv, traj, sys.n());
  }
  const ValueSample w = estimate_value(sys, opt.x0, cfg.sim);
  const AttractionEstimate a = estimate_attraction(sys, opt.x0, cfg.sim);
  std::cout << "path 0: " << to_string(path.status) << " at t = " << path.time << "\n"
            << "w_hat = " << w.w_hat << " (" << cfg.sim.value_samples << " paths)\n"
            << "attraction frequency = " << a.frequency << "  99% CI = [" << a.lower << ", " << a.upper << "] ("
            << a.samples << " paths)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Zubov certificates: quadratic and neural Lyapunov levels, probability bounds"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out, "Output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "Global seed override");
    sub->add_option("--max-boxes", opt.max_boxes, "Verifier box budget override");
    sub->add_option("--min-width-fraction", opt.min_width_fraction, "Verifier width floor override");
  };
  auto* quad = app.add_subcommand("quad", "Quadratic certificate: Lyapunov solve, local and extended levels");
  auto* trn = app.add_subcommand("train", "Generate value data and train the network");
  auto* cert = app.add_subcommand("certify", "Neural levels, inclusions and the composite certificate");
  auto* heat = app.add_subcommand("heatmap", "Probability bound on a grid (CSV and PGM)");
  auto* val = app.add_subcommand("validate", "Monte Carlo check of the probability bound");
  auto* smt = app.add_subcommand("export-smt", "SMT-LIB2 scripts for every certified condition");
  auto* sim = app.add_subcommand("simulate", "Simulate paths from a point or search for noise-stabilized points");
  for (auto* s : {quad, trn, cert, heat, val, smt, sim}) common(s);
  for (auto* s : {cert, smt}) s->add_option("--quad", opt.quad_report, "Quadratic report (default <out>/quadratic.json)");
  cert->add_option("--checkpoint", opt.checkpoint, "Network checkpoint (default <out>/checkpoint.json)");
  for (auto* s : {heat, val, smt}) s->add_option("--certificate", opt.certificate, "Certificate (default <out>/certificate.json)");
  for (auto* s : {val, sim}) s->add_option("--samples", opt.samples, "Paths per point override");
  sim->add_option("--x0", opt.x0, "Initial state")->delimiter(',');
  sim->add_flag("--search", opt.search, "Grid search for a point outside the noise-free attraction region that noise stabilizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*quad) return cmd_quad(opt);
    if (*trn) return cmd_train(opt);
    if (*cert) return cmd_certify(opt);
    if (*heat) return cmd_heatmap(opt);
    if (*val) return cmd_validate(opt);
    if (*smt) return cmd_export_smt(opt);
    if (*sim) return cmd_simulate(opt);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const SystemError& e) {
    std::cerr << "system error: " << e.what() << "\n";
    return kConfig;
  } catch (const LyapunovError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kOk;
}
