// Command-line front end: wires config files to the solvers and emits
// CSV artifacts plus a manifest for reproducibility.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "expfilt/bench.hpp"
#include "expfilt/cond_sampler.hpp"
#include "expfilt/config.hpp"
#include "expfilt/cov_kernel.hpp"
#include "expfilt/csv.hpp"
#include "expfilt/error.hpp"
#include "expfilt/exports.hpp"
#include "expfilt/expansion.hpp"
#include "expfilt/kalman.hpp"
#include "expfilt/riccati.hpp"
#include "expfilt/sde.hpp"
#include "expfilt/smoothing.hpp"

namespace fs = std::filesystem;
using namespace expfilt;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::string input_path;  // optional existing path export
  std::uint64_t seed = 12345;
  std::size_t paths = 1000;
  int order = 2;
  std::vector<std::string> r_flags;
  std::size_t samples = 1;
  std::size_t horizon_node = 0;  // 0 = last node
  unsigned threads = 0;
  int max_degree = PolySpec::kDefaultDegreeCap;
  std::size_t term_cap = kDefaultTermCap;
};

double parse_r(const std::string& s) {
  if (s == "inf" || s == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ConfigError("invalid --r value: " + s);
  }
}

std::vector<double> parse_r_list(const std::vector<std::string>& flags) {
  std::vector<double> out;
  for (const auto& s : flags) out.push_back(parse_r(s));
  return out;
}

// Reads a scalar path export (t,x,y) back in.
PathPair read_path_csv(const std::string& path, const TimeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input path file " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,", 0) != 0)
    throw ConfigError("input path file " + path + " missing t,x,y header");
  PathPair pp{grid, Eigen::MatrixXd::Zero(grid.n_nodes(), 1),
              Eigen::MatrixXd::Zero(grid.n_nodes(), 1), NoiseSeed{}};
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= grid.n_nodes())
      throw ConfigError("input path has more rows than the config grid");
    std::istringstream ls(line);
    std::string cell;
    double vals[3];
    for (int k = 0; k < 3; ++k) {
      if (!std::getline(ls, cell, ','))
        throw ConfigError("input path row " + std::to_string(row) +
                          " is malformed");
      vals[k] = std::stod(cell);
    }
    pp.x(static_cast<Eigen::Index>(row), 0) = vals[1];
    pp.y(static_cast<Eigen::Index>(row), 0) = vals[2];
    ++row;
  }
  if (row != grid.n_nodes())
    throw ConfigError("input path has fewer rows than the config grid");
  return pp;
}

void write_manifest(const Options& opt, const ModelConfig& cfg,
                    const std::string& command) {
  std::ostringstream os;
  os << "expfilt " << "0.1.0" << "\n";
  os << "eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
     << EIGEN_MINOR_VERSION << "\n";
  os << "command: " << command << "\n";
  std::ostringstream eff;
  eff << cfg.canonical() << "seed=" << opt.seed << "\norder=" << opt.order
      << "\npaths=" << opt.paths << "\n";
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(eff.str())));
  os << "config_hash: " << hash << "\n";
  os << "seed: " << opt.seed << "\n";
  os << "-- effective config --\n" << eff.str();
  atomic_write(fs::path(opt.out_dir) / "manifest.txt", os.str());
}

PathPair obtain_path(const Options& opt, const ModelConfig& cfg,
                     const TimeGrid& grid) {
  if (!opt.input_path.empty()) return read_path_csv(opt.input_path, grid);
  const auto model = cfg.perturbed(opt.max_degree);
  return simulate_perturbed(model, grid, NoiseSeed{opt.seed, 0});
}

int cmd_simulate(const Options& opt, const ModelConfig& cfg) {
  const TimeGrid grid = cfg.grid();
  const auto model = cfg.perturbed(opt.max_degree);
  const PathPair path = simulate_perturbed(model, grid, NoiseSeed{opt.seed, 0});
  atomic_write(fs::path(opt.out_dir) / "path.csv", path_csv(path));
  write_manifest(opt, cfg, "simulate");
  return 0;
}

int cmd_filter(const Options& opt, const ModelConfig& cfg) {
  const TimeGrid grid = cfg.grid();
  const auto model = cfg.linear(grid);
  const PathPair path = obtain_path(opt, cfg, grid);
  const FilterPath fp = kalman_bucy(model, path.y);
  atomic_write(fs::path(opt.out_dir) / "filter.csv", filter_csv(fp));
  write_manifest(opt, cfg, "filter");
  return 0;
}

int cmd_smooth(const Options& opt, const ModelConfig& cfg) {
  const TimeGrid grid = cfg.grid();
  const auto model = cfg.linear(grid);
  const PathPair path = obtain_path(opt, cfg, grid);
  const FilterPath fp = kalman_bucy(model, path.y);
  const std::size_t horizon =
      opt.horizon_node ? opt.horizon_node : grid.n_steps();
  const SmootherState sm = rts_smooth(model, fp, path.y, horizon);
  atomic_write(fs::path(opt.out_dir) / "smoother.csv", smoother_csv(sm));
  write_manifest(opt, cfg, "smooth");
  return 0;
}

int cmd_sample_cond(const Options& opt, const ModelConfig& cfg) {
  const TimeGrid grid = cfg.grid();
  const auto model = cfg.linear(grid);
  const PathPair path = obtain_path(opt, cfg, grid);
  const std::size_t horizon =
      opt.horizon_node ? opt.horizon_node : grid.n_steps();
  const RiccatiForward gamma = solve_gamma(model);
  const RiccatiBackward phi = solve_phi(model, horizon);
  const CovKernel kernel = cov_kernel(model, gamma, horizon);
  ConditionalSampler sampler(model, phi, kernel, path.y);

  std::ostringstream os;
  os << "s";
  for (std::size_t k = 0; k < opt.samples; ++k) os << ",zeta_" << k;
  os << "\n";
  std::vector<Eigen::MatrixXd> draws;
  for (std::size_t k = 0; k < opt.samples; ++k)
    draws.push_back(sampler.sample(NoiseSeed{opt.seed, k}));
  for (std::size_t s = 0; s <= horizon; ++s) {
    os << fmt_double(grid.node(s));
    for (const auto& d : draws)
      os << "," << fmt_double(d(static_cast<Eigen::Index>(s), 0));
    os << "\n";
  }
  atomic_write(fs::path(opt.out_dir) / "samples.csv", os.str());
  write_manifest(opt, cfg, "sample-cond");
  return 0;
}

int cmd_expand(const Options& opt, const ModelConfig& cfg) {
  const TimeGrid grid = cfg.grid();
  const auto model = cfg.perturbed(opt.max_degree);
  const PathPair path = obtain_path(opt, cfg, grid);
  const ExpansionEngine engine(model, opt.order, opt.term_cap);
  const std::vector<double> gamma =
      solve_gamma_scalar(model.a, model.b, model.c, model.sigma, grid, 0.0);
  std::vector<double> y(grid.n_nodes());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = path.y(static_cast<Eigen::Index>(i), 0);
  const ExpansionResult res =
      engine.run(grid, y.data(), gamma, parse_r_list(opt.r_flags));
  atomic_write(fs::path(opt.out_dir) / "expansion.csv", expansion_csv(res));
  atomic_write(fs::path(opt.out_dir) / "termsystem.txt",
               engine.system().dump());
  write_manifest(opt, cfg, "expand");
  return 0;
}

BenchConfig make_bench_config(const Options& opt, const ModelConfig& cfg) {
  BenchConfig bc{cfg.perturbed(opt.max_degree), cfg.grid()};
  bc.n_paths = opt.paths;
  bc.base_seed = opt.seed;
  bc.orders = {1, 2};
  bc.r_values = parse_r_list(opt.r_flags);
  bc.term_cap = opt.term_cap;
  bc.threads = opt.threads;
  return bc;
}

int cmd_bench(const Options& opt, const ModelConfig& cfg, bool with_sweep) {
  const BenchConfig bc = make_bench_config(opt, cfg);
  const BenchResult res = run_monte_carlo(bc);
  atomic_write(fs::path(opt.out_dir) / "records.csv", records_csv(res));
  atomic_write(fs::path(opt.out_dir) / "summary.csv", summary_csv(res));
  if (with_sweep)
    atomic_write(fs::path(opt.out_dir) / "sweep.csv",
                 sweep_csv(r_sweep(res, bc)));
  write_manifest(opt, cfg, with_sweep ? "sweep" : "bench");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time filtering and small-noise expansion toolkit"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--out", opt.out_dir, "output directory");

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    sub->add_option("--config", opt.config_path, "model config file")
        ->required(needs_config);
    sub->add_option("--seed", opt.seed, "base random seed");
    sub->add_option("--out", opt.out_dir, "output directory");
  };

  auto* c_sim = app.add_subcommand("simulate", "simulate one path pair");
  add_common(c_sim);

  auto* c_filter = app.add_subcommand("filter", "run the exact linear filter");
  add_common(c_filter);
  c_filter->add_option("--input", opt.input_path, "existing path.csv to filter");

  auto* c_smooth = app.add_subcommand("smooth", "fixed-interval smoother");
  add_common(c_smooth);
  c_smooth->add_option("--input", opt.input_path, "existing path.csv");
  c_smooth->add_option("--horizon-node", opt.horizon_node,
                       "horizon node (default: last)");

  auto* c_cond = app.add_subcommand("sample-cond",
                                    "sample conditional signal paths");
  add_common(c_cond);
  c_cond->add_option("--input", opt.input_path, "existing path.csv");
  c_cond->add_option("--samples", opt.samples, "number of samples");
  c_cond->add_option("--horizon-node", opt.horizon_node,
                     "horizon node (default: last)");

  auto* c_expand = app.add_subcommand("expand", "small-noise expansion filter");
  add_common(c_expand);
  c_expand->add_option("--input", opt.input_path, "existing path.csv");
  c_expand->add_option("--order", opt.order, "expansion order");
  c_expand->add_option("--r", opt.r_flags, "clip level (repeatable, inf ok)");
  c_expand->add_option("--max-degree", opt.max_degree,
                       "polynomial degree cap override");
  c_expand->add_option("--term-cap", opt.term_cap, "closure term cap");

  auto* c_bench = app.add_subcommand("bench", "Monte-Carlo benchmark");
  add_common(c_bench);
  c_bench->add_option("--paths", opt.paths, "number of sample paths");
  c_bench->add_option("--r", opt.r_flags, "clip level (repeatable, inf ok)");
  c_bench->add_option("--threads", opt.threads, "worker threads (0 = auto)");
  c_bench->add_option("--max-degree", opt.max_degree,
                      "polynomial degree cap override");
  c_bench->add_option("--term-cap", opt.term_cap, "closure term cap");

  auto* c_sweep = app.add_subcommand("sweep", "clip-level sweep");
  add_common(c_sweep);
  c_sweep->add_option("--paths", opt.paths, "number of sample paths");
  c_sweep->add_option("--r", opt.r_flags, "clip level (repeatable, inf ok)");
  c_sweep->add_option("--threads", opt.threads, "worker threads (0 = auto)");
  c_sweep->add_option("--max-degree", opt.max_degree,
                      "polynomial degree cap override");
  c_sweep->add_option("--term-cap", opt.term_cap, "closure term cap");

  CLI11_PARSE(app, argc, argv);

  try {
    const ModelConfig cfg = load_config_file(opt.config_path);
    if (c_sim->parsed()) return cmd_simulate(opt, cfg);
    if (c_filter->parsed()) return cmd_filter(opt, cfg);
    if (c_smooth->parsed()) return cmd_smooth(opt, cfg);
    if (c_cond->parsed()) return cmd_sample_cond(opt, cfg);
    if (c_expand->parsed()) return cmd_expand(opt, cfg);
    if (c_bench->parsed()) return cmd_bench(opt, cfg, false);
    if (c_sweep->parsed()) {
      if (opt.r_flags.empty())
        opt.r_flags = {"0.1", "0.2", "0.3", "0.4", "0.5",
                       "0.6", "0.7", "0.8", "0.9", "1.0", "inf"};
      return cmd_bench(opt, cfg, true);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
