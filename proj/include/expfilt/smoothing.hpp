#pragma once

#include <Eigen/Dense>
#include <vector>

#include "expfilt/error.hpp"
#include "expfilt/kalman.hpp"
#include "expfilt/models.hpp"
#include "expfilt/riccati.hpp"

namespace expfilt {

/// Smoothed means mu_{s;t} for all nodes s <= horizon at a fixed horizon
/// t, plus the kernel rows Cov(xi_{s;t}, xi_{t;t}).
struct SmootherState {
  TimeGrid grid;
  std::size_t horizon_node = 0;
  std::vector<Vector> mu_s_t;  // node s -> mu_{s;t}, s <= horizon
  std::vector<Matrix> k_row;   // node s -> Cov(xi_{s;t}, xi_{t;t})
};

namespace detail {

struct GainArrays {
  std::vector<Matrix> F;      // a - gamma C
  std::vector<Matrix> G;      // c^T (sigma sigma^T)^{-1}
  std::vector<Vector> innov;  // dY_i - c mu_{i;i} dt
};

inline GainArrays gain_arrays(const LinearGaussianModel& model,
                              const RiccatiForward& gamma,
                              const FilterPath& filter,
                              const Eigen::MatrixXd& y_path) {
  const TimeGrid& grid = model.grid();
  if (filter.grid != grid || gamma.grid != grid)
    throw ContractError("smoother: grid mismatch between model and filter");
  if (static_cast<std::size_t>(y_path.rows()) != grid.n_nodes())
    throw ContractError("smoother: observation path does not match grid");
  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt();
  GainArrays out;
  out.F.reserve(n);
  out.G.reserve(n);
  out.innov.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix ss = model.sigma_sq(i);
    const Matrix G = ss.ldlt().solve(model.c(i)).transpose();
    out.G.push_back(G);
    out.F.push_back(model.a(i) - gamma.at(i) * G * model.c(i));
    if (i + 1 < n) {
      const Vector dy = (y_path.row(i + 1) - y_path.row(i)).transpose();
      out.innov.push_back(dy - model.c(i) * filter.mu[i] * dt);
    }
  }
  return out;
}

}  // namespace detail

/// Fixed-interval smoother. Backward adjoint recursion
///   lam_T = 0,  lam_s = G_s dI_s + (I + F_s^T dt) lam_{s+1},
///   mu_{s;t} = mu_{s;s} + gamma(s) lam_s,
/// which discretizes d mu_{s;t}/ds = a mu_{s;t}
///   + b b^T gamma(s)^{-1} (mu_{s;t} - mu_{s;s})
/// without ever inverting gamma, so a singular x0_cov needs no
/// regularization here.
inline SmootherState rts_smooth(const LinearGaussianModel& model,
                                const FilterPath& filter,
                                const Eigen::MatrixXd& y_path,
                                std::size_t horizon_node) {
  const TimeGrid& grid = model.grid();
  if (horizon_node >= grid.n_nodes())
    throw ContractError("rts_smooth: horizon is not a grid node");
  const auto ga = detail::gain_arrays(model, filter.gamma, filter, y_path);
  const double dt = grid.dt();
  const int d1 = model.dim_x();

  SmootherState out{grid, horizon_node,
                    std::vector<Vector>(horizon_node + 1),
                    std::vector<Matrix>(horizon_node + 1)};
  Vector lam = Vector::Zero(d1);
  Matrix q = Matrix::Identity(d1, d1);  // transpose of the propagator to t
  out.mu_s_t[horizon_node] = filter.mu[horizon_node];
  out.k_row[horizon_node] = filter.gamma.at(horizon_node);
  for (std::size_t s = horizon_node; s-- > 0;) {
    lam = ga.G[s] * ga.innov[s] + (Matrix::Identity(d1, d1) +
                                   ga.F[s].transpose() * dt) * lam;
    q = (Matrix::Identity(d1, d1) + ga.F[s].transpose() * dt) * q;
    out.mu_s_t[s] = filter.mu[s] + filter.gamma.at(s) * lam;
    out.k_row[s] = filter.gamma.at(s) * q;
  }
  return out;
}

/// Fixed-point smoother: evolves mu_{s;t} forward in t at fixed s,
///   d_t mu_{s;t} = Cov(xi_{s;t}, xi_{t;t}) c^T (sigma sigma^T)^{-1}
///                  (dY_t - c mu_{t;t} dt),
/// with the cross covariance propagated by
///   Cov(s, t+dt) = Cov(s, t)(I + F_t^T dt),  Cov(s, s) = gamma(s).
/// Returns mu_{s;t} for t = s..end of grid.
inline std::vector<Vector> fixed_point_smoother(
    const LinearGaussianModel& model, const FilterPath& filter,
    const Eigen::MatrixXd& y_path, std::size_t s_node) {
  const TimeGrid& grid = model.grid();
  if (s_node >= grid.n_nodes())
    throw ContractError("fixed_point_smoother: s is not a grid node");
  const auto ga = detail::gain_arrays(model, filter.gamma, filter, y_path);
  const double dt = grid.dt();
  const int d1 = model.dim_x();

  std::vector<Vector> out;
  out.reserve(grid.n_nodes() - s_node);
  Vector mu = filter.mu[s_node];
  Matrix cov = filter.gamma.at(s_node);  // Cov(xi_{s;t}, xi_{t;t})
  out.push_back(mu);
  for (std::size_t v = s_node; v + 1 < grid.n_nodes(); ++v) {
    mu += cov * ga.G[v] * ga.innov[v];
    cov = cov * (Matrix::Identity(d1, d1) + ga.F[v].transpose() * dt);
    out.push_back(mu);
  }
  return out;
}

}  // namespace expfilt
