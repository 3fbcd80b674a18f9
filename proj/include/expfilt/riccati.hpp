#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "expfilt/error.hpp"
#include "expfilt/models.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

/// Forward Riccati solution: gamma(t_i) for every grid node, the
/// filtered error covariance.  gamma(0) = V[X_0].
struct RiccatiForward {
  TimeGrid grid;
  std::vector<Matrix> gamma;

  const Matrix& at(std::size_t i) const { return gamma[i]; }
};

/// Backward Riccati solution: phi(s; t) on nodes s <= horizon, negative
/// semidefinite, phi(t; t) = 0.
struct RiccatiBackward {
  TimeGrid grid;
  std::size_t horizon_node = 0;
  std::vector<Matrix> phi;  // indexed by node, valid for s <= horizon

  const Matrix& at(std::size_t i) const { return phi[i]; }
};

namespace detail {

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// c^T (sigma sigma^T)^{-1} c at node/midpoint matrices.
inline Matrix obs_precision(const Matrix& c, const Matrix& sigma) {
  const Matrix ss = sigma * sigma.transpose();
  return c.transpose() * ss.ldlt().solve(c);
}

inline void check_psd(const Matrix& m, double tol_scale, std::size_t node,
                      const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.eigenvalues().minCoeff() < -1e-10 * tol_scale)
    throw NumericalError(std::string(what) +
                         ": lost positive semidefiniteness at node " +
                         std::to_string(node));
}

inline void check_nsd(const Matrix& m, double tol_scale, std::size_t node,
                      const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.eigenvalues().maxCoeff() > 1e-10 * tol_scale)
    throw NumericalError(std::string(what) +
                         ": lost negative semidefiniteness at node " +
                         std::to_string(node));
}

}  // namespace detail

/// Classical RK4 solution of
///   dgamma/dt = -gamma C gamma + a gamma + gamma a^T + b b^T,
///   C = c^T (sigma sigma^T)^{-1} c,  gamma(0) = x0_cov,
/// symmetrized after every step. Midpoint coefficients are node averages.
inline RiccatiForward solve_gamma(const LinearGaussianModel& model) {
  const TimeGrid& grid = model.grid();
  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt();

  RiccatiForward out{grid, {}};
  out.gamma.reserve(n);
  Matrix g = detail::sym(model.x0_cov());
  out.gamma.push_back(g);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Matrix bb0 = model.b(i) * model.b(i).transpose();
    const Matrix bbm = model.b_mid(i) * model.b_mid(i).transpose();
    const Matrix bb1 = model.b(i + 1) * model.b(i + 1).transpose();
    const Matrix c0 = detail::obs_precision(model.c(i), model.sigma(i));
    const Matrix cm = detail::obs_precision(model.c_mid(i), model.sigma_mid(i));
    const Matrix c1 = detail::obs_precision(model.c(i + 1), model.sigma(i + 1));
    const Matrix &a0 = model.a(i), a_m = model.a_mid(i), &a1 = model.a(i + 1);

    auto f = [](const Matrix& g_, const Matrix& a_, const Matrix& bb_,
                const Matrix& c_) -> Matrix {
      return -g_ * c_ * g_ + a_ * g_ + g_ * a_.transpose() + bb_;
    };
    const Matrix k1 = f(g, a0, bb0, c0);
    const Matrix k2 = f(g + 0.5 * dt * k1, a_m, bbm, cm);
    const Matrix k3 = f(g + 0.5 * dt * k2, a_m, bbm, cm);
    const Matrix k4 = f(g + dt * k3, a1, bb1, c1);
    g = detail::sym(g + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    detail::check_psd(g, 1.0 + g.norm(), i + 1, "solve_gamma");
    out.gamma.push_back(g);
  }
  return out;
}

/// Backward RK4 solution of
///   dphi/ds = -phi b b^T phi - a^T phi - phi a + C,  phi(t; t) = 0,
/// for s in [0, t]; the result is symmetric negative semidefinite.
inline RiccatiBackward solve_phi(const LinearGaussianModel& model,
                                 std::size_t horizon_node) {
  const TimeGrid& grid = model.grid();
  if (horizon_node >= grid.n_nodes())
    throw ContractError("solve_phi: horizon is not a grid node");
  const double dt = grid.dt();

  RiccatiBackward out{grid, horizon_node,
                      std::vector<Matrix>(grid.n_nodes(),
                                          Matrix::Zero(model.dim_x(),
                                                       model.dim_x()))};
  Matrix p = Matrix::Zero(model.dim_x(), model.dim_x());
  out.phi[horizon_node] = p;

  for (std::size_t i = horizon_node; i-- > 0;) {
    // step from node i+1 down to node i
    const Matrix bb0 = model.b(i + 1) * model.b(i + 1).transpose();
    const Matrix bbm = model.b_mid(i) * model.b_mid(i).transpose();
    const Matrix bb1 = model.b(i) * model.b(i).transpose();
    const Matrix c0 = detail::obs_precision(model.c(i + 1), model.sigma(i + 1));
    const Matrix cm = detail::obs_precision(model.c_mid(i), model.sigma_mid(i));
    const Matrix c1 = detail::obs_precision(model.c(i), model.sigma(i));
    const Matrix &a0 = model.a(i + 1), a_m = model.a_mid(i), &a1 = model.a(i);

    auto f = [](const Matrix& p_, const Matrix& a_, const Matrix& bb_,
                const Matrix& c_) -> Matrix {
      return -p_ * bb_ * p_ - a_.transpose() * p_ - p_ * a_ + c_;
    };
    const Matrix k1 = f(p, a0, bb0, c0);
    const Matrix k2 = f(p - 0.5 * dt * k1, a_m, bbm, cm);
    const Matrix k3 = f(p - 0.5 * dt * k2, a_m, bbm, cm);
    const Matrix k4 = f(p - dt * k3, a1, bb1, c1);
    p = detail::sym(p - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    detail::check_nsd(p, 1.0 + p.norm(), i, "solve_phi");
    out.phi[i] = p;
  }
  return out;
}

}  // namespace expfilt
