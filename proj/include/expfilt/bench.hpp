#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "expfilt/csv.hpp"
#include "expfilt/error.hpp"
#include "expfilt/expansion.hpp"
#include "expfilt/kalman.hpp"
#include "expfilt/models.hpp"
#include "expfilt/rng.hpp"
#include "expfilt/sde.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

/// Integrated squared error, left-endpoint Riemann sum of
/// (x_t - estimate_t)^2 over the horizon.
inline double ise(const double* x, const double* estimate, std::size_t n_nodes,
                  double dt) {
  if (n_nodes < 1) throw ContractError("ise: empty paths");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
    const double d = x[i] - estimate[i];
    acc += d * d * dt;
  }
  return acc;
}

inline double ise(const std::vector<double>& x, const std::vector<double>& e,
                  const TimeGrid& grid) {
  if (x.size() != e.size() || x.size() != grid.n_nodes())
    throw ContractError("ise: path length mismatch");
  return ise(x.data(), e.data(), grid.n_nodes(), grid.dt());
}

/// Monte-Carlo experiment configuration.
struct BenchConfig {
  PerturbedLinearModel model;
  TimeGrid grid;
  std::size_t n_paths = 1000;
  std::uint64_t base_seed = 0;
  std::vector<int> orders = {1, 2};     // expansion orders to evaluate
  std::vector<double> r_values = {};    // clip levels; may include infinity
  std::size_t term_cap = kDefaultTermCap;
  unsigned threads = 0;                 // 0 = hardware concurrency
};

/// Per-path result: integrated squared error per estimator variant, in
/// the column order reported by variant_names().
struct IseRecord {
  std::size_t path_index = 0;
  std::uint64_t base_seed = 0;
  std::vector<double> ise;  // NaN where the variant was not finite
  std::string status;       // "ok" or failure note
};

struct BenchSummary {
  struct Row {
    std::string variant;
    double min = 0, median = 0, mean = 0, max = 0;
    std::size_t n_ok = 0;
  };
  std::vector<Row> rows;
  std::size_t n_paths = 0;
  std::size_t n_completed = 0;  // paths with every variant finite

  const Row& at(const std::string& variant) const {
    for (const auto& r : rows)
      if (r.variant == variant) return r;
    throw ContractError("BenchSummary: unknown variant " + variant);
  }
};

struct BenchResult {
  std::vector<std::string> variants;
  std::vector<IseRecord> records;
  BenchSummary summary;
};

namespace detail {

inline std::string r_label(double r) {
  if (std::isinf(r)) return "inf";
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace detail

/// Estimator column names for a config: mu, n<order>..., then
/// n<order>_r<value> for every clip level.
inline std::vector<std::string> bench_variants(const BenchConfig& cfg) {
  std::vector<std::string> v = {"mu"};
  for (int o : cfg.orders) v.push_back("n" + std::to_string(o));
  for (int o : cfg.orders)
    for (double r : cfg.r_values)
      v.push_back("n" + std::to_string(o) + "_r" + detail::r_label(r));
  return v;
}

/// Runs the full Monte-Carlo benchmark: per path, simulate, filter,
/// expand, clip, score. Paths are deterministic in (base_seed,
/// path_index) and embarrassingly parallel; aggregation is a pure fold
/// in path order, so results do not depend on the worker count.
inline BenchResult run_monte_carlo(const BenchConfig& cfg) {
  if (cfg.n_paths < 1) throw ContractError("run_monte_carlo: n_paths >= 1");
  const int max_order =
      cfg.orders.empty() ? 0 : *std::max_element(cfg.orders.begin(),
                                                 cfg.orders.end());

  // Shared immutable context: gamma is deterministic, the engine holds
  // the symbolic system for the highest requested order.
  const std::vector<double> gamma = solve_gamma_scalar(
      cfg.model.a, cfg.model.b, cfg.model.c, cfg.model.sigma, cfg.grid, 0.0);
  const ExpansionEngine engine(cfg.model, max_order, cfg.term_cap);

  BenchResult out;
  out.variants = bench_variants(cfg);
  out.records.assign(cfg.n_paths, IseRecord{});

  const std::size_t n_nodes = cfg.grid.n_nodes();
  const double dt = cfg.grid.dt();

  auto run_path = [&](std::size_t idx) {
    IseRecord rec;
    rec.path_index = idx;
    rec.base_seed = cfg.base_seed;
    rec.ise.assign(out.variants.size(), std::numeric_limits<double>::quiet_NaN());
    rec.status = "ok";
    try {
      const PathPair path =
          simulate_perturbed(cfg.model, cfg.grid, NoiseSeed{cfg.base_seed, idx});
      const double* x = path.x.col(0).data();
      const double* y = path.y.col(0).data();
      const ExpansionResult ex = engine.run(cfg.grid, y, gamma, {});

      std::size_t col = 0;
      rec.ise[col++] = ise(x, ex.n_raw[0].data(), n_nodes, dt);
      for (int o : cfg.orders) {
        std::vector<double> est(n_nodes, 0.0);
        for (std::size_t t = 0; t < n_nodes; ++t) {
          double acc = 0.0, epow = 1.0;
          for (int i = 0; i <= o; ++i) {
            acc += ex.n_raw[i][t] * epow;
            epow *= ex.epsilon;
          }
          est[t] = acc;
        }
        rec.ise[col++] = ise(x, est.data(), n_nodes, dt);
      }
      for (int o : cfg.orders) {
        ExpansionResult sub;
        sub.grid = ex.grid;
        sub.epsilon = ex.epsilon;
        sub.order = o;
        sub.n_raw.assign(ex.n_raw.begin(), ex.n_raw.begin() + o + 1);
        for (double r : cfg.r_values) {
          const std::vector<double> est = ExpansionEngine::clipped_path(sub, r);
          rec.ise[col++] = ise(x, est.data(), n_nodes, dt);
        }
      }
      for (double& v : rec.ise)
        if (!std::isfinite(v)) v = std::numeric_limits<double>::quiet_NaN();
    } catch (const NumericalError& e) {
      rec.status = std::string("failed: ") + e.what();
    }
    out.records[idx] = std::move(rec);
  };

  unsigned workers = cfg.threads ? cfg.threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, cfg.n_paths);
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.n_paths; ++i) run_path(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cfg.n_paths;
             i = next.fetch_add(1))
          run_path(i);
      });
    for (auto& t : pool) t.join();
  }

  // Summary statistics over finite values only.
  out.summary.n_paths = cfg.n_paths;
  out.summary.n_completed = 0;
  for (const auto& rec : out.records) {
    bool all = rec.status == "ok";
    for (double v : rec.ise) all = all && std::isfinite(v);
    if (all) ++out.summary.n_completed;
  }
  for (std::size_t c = 0; c < out.variants.size(); ++c) {
    std::vector<double> vals;
    vals.reserve(cfg.n_paths);
    for (const auto& rec : out.records)
      if (std::isfinite(rec.ise.empty() ? NAN : rec.ise[c]))
        vals.push_back(rec.ise[c]);
    BenchSummary::Row row;
    row.variant = out.variants[c];
    row.n_ok = vals.size();
    if (!vals.empty()) {
      std::sort(vals.begin(), vals.end());
      row.min = vals.front();
      row.max = vals.back();
      const std::size_t m = vals.size();
      row.median = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
      double s = 0.0;
      for (double v : vals) s += v;
      row.mean = s / static_cast<double>(m);
    }
    out.summary.rows.push_back(row);
  }
  return out;
}

/// Mean ISE of the clipped variants across the r grid; r = infinity
/// reproduces the unclipped column.
struct SweepRow {
  double r;
  double mise_n1;
  double mise_n2;
};

inline std::vector<SweepRow> r_sweep(const BenchResult& bench,
                                     const BenchConfig& cfg) {
  if (cfg.r_values.size() < 2)
    throw ContractError("r_sweep: need at least two r values");
  std::vector<SweepRow> rows;
  for (double r : cfg.r_values) {
    SweepRow row{r, NAN, NAN};
    row.mise_n1 = bench.summary.at("n1_r" + detail::r_label(r)).mean;
    row.mise_n2 = bench.summary.at("n2_r" + detail::r_label(r)).mean;
    rows.push_back(row);
  }
  return rows;
}

// ---- CSV emission ----

inline std::string records_csv(const BenchResult& bench) {
  std::ostringstream os;
  os << "path_index,seed";
  for (const auto& v : bench.variants) os << ",ise_" << v;
  os << ",status\n";
  for (const auto& rec : bench.records) {
    os << rec.path_index << "," << rec.base_seed;
    for (double v : rec.ise) os << "," << fmt_double(v);
    os << "," << rec.status << "\n";
  }
  return os.str();
}

inline std::string summary_csv(const BenchResult& bench) {
  std::ostringstream os;
  os << "variant,min,median,mean,max,n_ok\n";
  for (const auto& row : bench.summary.rows)
    os << row.variant << "," << fmt_double(row.min) << ","
       << fmt_double(row.median) << "," << fmt_double(row.mean) << ","
       << fmt_double(row.max) << "," << row.n_ok << "\n";
  return os.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "r,mise_n1,mise_n2\n";
  for (const auto& row : rows)
    os << detail::r_label(row.r) << "," << fmt_double(row.mise_n1) << ","
       << fmt_double(row.mise_n2) << "\n";
  return os.str();
}

}  // namespace expfilt
