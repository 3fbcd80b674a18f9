#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>

#include "expfilt/bench.hpp"

using namespace expfilt;

namespace {

BenchConfig small_config(double eps) {
  BenchConfig cfg{PerturbedLinearModel(-0.4, 0.5, 1.0, 0.3, eps,
                                       PolySpec({0.0, 0.0, 0.0, 1.0})),
                  TimeGrid(0.0, 0.01, 500)};  // T = 5, fast
  cfg.n_paths = 24;
  cfg.base_seed = 777;
  cfg.r_values = {0.2, std::numeric_limits<double>::infinity()};
  return cfg;
}

}  // namespace

TEST_CASE("integrated squared error basics") {
  TimeGrid grid(0.0, 0.1, 10);
  std::vector<double> x(11, 1.0), same(11, 1.0), off(11, 1.5);
  REQUIRE(ise(x, same, grid) == 0.0);
  REQUIRE(ise(x, off, grid) == Catch::Approx(0.25 * 1.0));  // d^2 T
  std::vector<double> shorter(10, 0.0);
  REQUIRE_THROWS_AS(ise(x, shorter, grid), ContractError);
}

TEST_CASE("bench with eps = 0 collapses every variant onto the filter") {
  auto cfg = small_config(0.0);
  auto res = run_monte_carlo(cfg);
  REQUIRE(res.summary.n_completed == cfg.n_paths);
  for (const auto& rec : res.records) {
    REQUIRE(rec.status == "ok");
    for (double v : rec.ise) REQUIRE(v == rec.ise[0]);
  }
}

TEST_CASE("bench is deterministic across thread counts") {
  auto cfg = small_config(0.2);
  cfg.threads = 1;
  auto r1 = run_monte_carlo(cfg);
  cfg.threads = 2;
  auto r2 = run_monte_carlo(cfg);
  REQUIRE(r1.variants == r2.variants);
  REQUIRE(r1.records.size() == r2.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) {
    REQUIRE(r1.records[i].status == r2.records[i].status);
    for (std::size_t c = 0; c < r1.records[i].ise.size(); ++c) {
      const double a = r1.records[i].ise[c], b = r2.records[i].ise[c];
      REQUIRE(((std::isnan(a) && std::isnan(b)) || a == b));
    }
  }
}

TEST_CASE("r = infinity column equals the raw expansion exactly") {
  auto cfg = small_config(0.2);
  auto res = run_monte_carlo(cfg);
  const auto& vars = res.variants;
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return i;
    FAIL("missing column " + name);
    return std::size_t{0};
  };
  const auto c_n1 = col("n1"), c_n1inf = col("n1_rinf");
  const auto c_n2 = col("n2"), c_n2inf = col("n2_rinf");
  for (const auto& rec : res.records) {
    REQUIRE(rec.ise[c_n1] == rec.ise[c_n1inf]);
    REQUIRE(rec.ise[c_n2] == rec.ise[c_n2inf]);
  }
}

TEST_CASE("clipping to r -> 0 recovers the plain filter") {
  auto cfg = small_config(0.2);
  cfg.r_values = {1e-9};
  auto res = run_monte_carlo(cfg);
  const auto& s = res.summary;
  REQUIRE(s.at("n1_r1e-09").mean ==
          Catch::Approx(s.at("mu").mean).epsilon(1e-6));
}

TEST_CASE("summary statistics are computed over completed paths") {
  auto cfg = small_config(0.2);
  auto res = run_monte_carlo(cfg);
  const auto& mu_row = res.summary.at("mu");
  REQUIRE(mu_row.n_ok == cfg.n_paths);
  REQUIRE(mu_row.min <= mu_row.median);
  REQUIRE(mu_row.median <= mu_row.max);
  REQUIRE(mu_row.min >= 0.0);
}

TEST_CASE("diverging model is flagged, not fatal") {
  BenchConfig cfg{PerturbedLinearModel(0.9, 1.0, 1.0, 0.05, 0.9,
                                       PolySpec({0.0, 0.0, 0.0, 1.0})),
                  TimeGrid(0.0, 0.01, 4000)};  // T = 40, exploding signal
  cfg.n_paths = 3;
  cfg.base_seed = 5;
  cfg.r_values = {};
  auto res = run_monte_carlo(cfg);
  std::size_t flagged = 0;
  for (const auto& rec : res.records)
    if (rec.status != "ok") ++flagged;
  REQUIRE(flagged > 0);
  REQUIRE(res.summary.n_completed == cfg.n_paths - flagged);
}

TEST_CASE("sweep table reproduces the clipped summary columns") {
  auto cfg = small_config(0.2);
  cfg.r_values = {0.1, 0.2, std::numeric_limits<double>::infinity()};
  auto res = run_monte_carlo(cfg);
  auto rows = r_sweep(res, cfg);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[0].r == 0.1);
  REQUIRE(rows[2].mise_n1 == res.summary.at("n1_rinf").mean);
  REQUIRE(rows[2].mise_n2 == res.summary.at("n2_rinf").mean);
  // csv emission smoke
  const auto csv = sweep_csv(rows);
  REQUIRE(csv.find("r,mise_n1,mise_n2") == 0);
  REQUIRE(csv.find("inf,") != std::string::npos);
}
