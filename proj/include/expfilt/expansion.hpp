#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "expfilt/closure.hpp"
#include "expfilt/error.hpp"
#include "expfilt/integrate.hpp"
#include "expfilt/jterms.hpp"
#include "expfilt/kalman.hpp"
#include "expfilt/models.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

/// eps-series combination of the J values at one time point. Implements
/// the signed-product expansion of the normalizing quotient: for each i,
///   n_i = sum_{k=0}^{i} J^k(X) * sum_{(i_1..i_p) comp of i-k} (-1)^p
///         J^{i_1}(1) ... J^{i_p}(1),
/// with n_0 = J^0(X). (Equivalently, the truncated series division of
/// sum J^i(X) eps^i by sum J^i(1) eps^i.)
inline std::vector<double> combine(const std::vector<double>& j_x,
                                   const std::vector<double>& j_one) {
  const int order = static_cast<int>(j_x.size()) - 1;
  // signed composition sums B_m over ordered compositions of m
  std::vector<double> B(order + 1, 0.0);
  B[0] = 1.0;
  for (int m = 1; m <= order; ++m) {
    double acc = 0.0;
    // compositions of m with first part l, remainder any composition
    // of m - l; the sign flips once per part.
    for (int l = 1; l <= m; ++l) acc -= j_one[l] * B[m - l];
    B[m] = acc;
  }
  std::vector<double> n(order + 1, 0.0);
  for (int i = 0; i <= order; ++i)
    for (int k = 0; k <= i; ++k) n[i] += j_x[k] * B[i - k];
  return n;
}

/// Coefficient clipping: ntilde_0 = n_0 and each further term is capped
/// at ratio r of the previous kept term's magnitude, sign preserved.
/// r = infinity leaves the coefficients untouched.
inline std::vector<double> clip(const std::vector<double>& n_coeffs,
                                double epsilon, double r) {
  if (!(r > 0.0)) throw ContractError("clip: r must be > 0 or infinity");
  std::vector<double> out = n_coeffs;
  if (std::isinf(r)) return out;
  double prev_mag = std::abs(out.empty() ? 0.0 : out[0]);  // |ntilde_{i-1} eps^{i-1}|
  double epow = 1.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    epow *= epsilon;
    const double mag = std::abs(out[i]) * epow;
    if (mag > r * prev_mag)
      out[i] = (out[i] > 0 ? 1.0 : -1.0) * r * prev_mag / epow;
    prev_mag = std::abs(out[i]) * epow;
  }
  return out;
}

/// Raw and clipped expansion paths along one observed path.
struct ExpansionResult {
  TimeGrid grid{0.0, 1.0, 1};
  double epsilon = 0.0;
  int order = 0;
  std::vector<std::vector<double>> n_raw;  // [i][node], n_raw[0] = mu_{t;t}
  std::vector<double> combined;            // N^{[order]} per node
  std::map<double, std::vector<double>> clipped;  // r -> clipped path
};

/// Precompiled expansion pipeline for one perturbed-linear model and
/// order: J-term polynomials, closed term system, compiled evaluators.
/// Immutable after construction, safe to share across worker threads.
class ExpansionEngine {
 public:
  ExpansionEngine(const PerturbedLinearModel& model, int order,
                  std::size_t term_cap = kDefaultTermCap)
      : model_(model),
        order_(order),
        coeffs_{model.a, model.c, model.sigma},
        jterms_(build_j_terms(model.g, order, coeffs_, term_cap)) {
    std::vector<TermPolynomial> seeds;
    for (const auto& p : jterms_.j_x) seeds.push_back(p);
    for (const auto& p : jterms_.j_one) seeds.push_back(p);
    system_ = derive_closure(seeds, coeffs_, term_cap);
    compiled_ = std::make_unique<CompiledSystem>(system_);
    for (int i = 0; i <= order; ++i) {
      cj_x_.push_back(compiled_->compile(jterms_.j_x[i]));
      cj_one_.push_back(compiled_->compile(jterms_.j_one[i]));
    }
  }

  const TermSystem& system() const { return system_; }
  const JTerms& jterms() const { return jterms_; }
  int order() const { return order_; }

  /// Runs the closed system along one path and assembles coefficients,
  /// the combined filter and clipped variants. gamma is the scalar
  /// forward Riccati solution on the grid (shared across paths).
  ExpansionResult run(const TimeGrid& grid, const double* y,
                      const std::vector<double>& gamma,
                      const std::vector<double>& r_values) const {
    const std::size_t n = grid.n_nodes();
    if (gamma.size() != n)
      throw ContractError("ExpansionEngine::run: gamma size mismatch");
    const std::vector<double> mu =
        kalman_bucy_scalar(model_.a, model_.c, model_.sigma, grid, gamma, y);

    ExpansionResult res;
    res.grid = grid;
    res.epsilon = model_.epsilon;
    res.order = order_;
    res.n_raw.assign(order_ + 1, std::vector<double>(n));

    std::vector<double> jx(order_ + 1), j1(order_ + 1);
    integrate_closure_visit(
        *compiled_, grid, y, mu.data(), gamma.data(),
        [&](std::size_t node, const double* s) {
          for (int i = 0; i <= order_; ++i) {
            jx[i] = cj_x_[i].eval(mu[node], gamma[node], s);
            j1[i] = cj_one_[i].eval(mu[node], gamma[node], s);
          }
          const std::vector<double> nc = combine(jx, j1);
          for (int i = 0; i <= order_; ++i) res.n_raw[i][node] = nc[i];
        });

    res.combined = sum_series(res.n_raw, res.epsilon, n);
    for (double r : r_values) res.clipped[r] = clipped_path(res, r);
    return res;
  }

  /// Clipped combined path for one r, from raw per-node coefficients.
  static std::vector<double> clipped_path(const ExpansionResult& res,
                                          double r) {
    const std::size_t n = res.n_raw.empty() ? 0 : res.n_raw[0].size();
    const int order = static_cast<int>(res.n_raw.size()) - 1;
    std::vector<double> out(n);
    std::vector<double> coeffs(order + 1);
    for (std::size_t t = 0; t < n; ++t) {
      for (int i = 0; i <= order; ++i) coeffs[i] = res.n_raw[i][t];
      const std::vector<double> cl = clip(coeffs, res.epsilon, r);
      double acc = 0.0, epow = 1.0;
      for (int i = 0; i <= order; ++i) {
        acc += cl[i] * epow;
        epow *= res.epsilon;
      }
      out[t] = acc;
    }
    return out;
  }

 private:
  static std::vector<double> sum_series(
      const std::vector<std::vector<double>>& n_raw, double eps,
      std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0, epow = 1.0;
      for (const auto& coef : n_raw) {
        acc += coef[t] * epow;
        epow *= eps;
      }
      out[t] = acc;
    }
    return out;
  }

  PerturbedLinearModel model_;
  int order_;
  ScalarCoeffs coeffs_;
  JTerms jterms_;
  TermSystem system_;
  std::unique_ptr<CompiledSystem> compiled_;
  std::vector<CompiledSystem::Poly> cj_x_, cj_one_;
};

}  // namespace expfilt
