#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "expfilt/error.hpp"
#include "expfilt/models.hpp"
#include "expfilt/rng.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

/// A simulated signal/observation pair on a grid. Row i of x (resp. y)
/// is the state (resp. observation) at node i; y.row(0) is always zero.
struct PathPair {
  TimeGrid grid;
  Eigen::MatrixXd x;  // (n_nodes) x d1
  Eigen::MatrixXd y;  // (n_nodes) x d2
  NoiseSeed seed;
};

namespace detail {

inline void check_finite(const Eigen::MatrixXd& row, std::size_t node,
                         const char* what) {
  if (!row.allFinite())
    throw NumericalError(std::string("simulate: non-finite ") + what +
                         " at node " + std::to_string(node));
}

}  // namespace detail

/// Euler-Maruyama simulation of the linear-Gaussian system.
/// X_{i+1} = X_i + a(t_i) X_i dt + b(t_i) dV_i,
/// Y_{i+1} = Y_i + c(t_i) X_i dt + sigma(t_i) dW_i,
/// with dV, dW independent N(0, dt I). V-noise uses channels
/// [0, m1), W-noise channels [m1, m1+m2).
inline PathPair simulate_linear(const LinearGaussianModel& model,
                                const TimeGrid& grid, const NoiseSeed& seed) {
  if (grid != model.grid())
    throw ContractError("simulate_linear: grid does not match model grid");
  const std::size_t n = grid.n_nodes();
  const int d1 = model.dim_x(), d2 = model.dim_y();
  const int m1 = model.dim_v(), m2 = model.dim_w();
  const double dt = grid.dt(), sdt = std::sqrt(dt);

  CounterRng rng(seed);
  PathPair out{grid, Eigen::MatrixXd::Zero(n, d1), Eigen::MatrixXd::Zero(n, d2),
               seed};

  // Initial draw from N(x0_mean, x0_cov); channel block after the
  // increment channels keeps it independent of them.
  Eigen::VectorXd x = model.x0_mean();
  if (model.x0_cov().norm() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.x0_cov());
    Eigen::VectorXd z(d1);
    for (int j = 0; j < d1; ++j)
      z(j) = rng.normal(0, static_cast<std::uint32_t>(m1 + m2 + j));
    x += es.operatorSqrt() * z;
  }
  out.x.row(0) = x.transpose();

  Eigen::VectorXd y = Eigen::VectorXd::Zero(d2);
  Eigen::VectorXd dv(m1), dw(m2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (int j = 0; j < m1; ++j)
      dv(j) = sdt * rng.normal(i + 1, static_cast<std::uint32_t>(j));
    for (int j = 0; j < m2; ++j)
      dw(j) = sdt * rng.normal(i + 1, static_cast<std::uint32_t>(m1 + j));
    y += model.c(i) * x * dt + model.sigma(i) * dw;
    x += model.a(i) * x * dt + model.b(i) * dv;
    detail::check_finite(x, i + 1, "state");
    out.x.row(i + 1) = x.transpose();
    out.y.row(i + 1) = y.transpose();
  }
  return out;
}

/// Scalar perturbed-linear simulation: observation drift c X + eps g(X).
inline PathPair simulate_perturbed(const PerturbedLinearModel& model,
                                   const TimeGrid& grid,
                                   const NoiseSeed& seed) {
  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt(), sdt = std::sqrt(dt);
  CounterRng rng(seed);
  PathPair out{grid, Eigen::MatrixXd::Zero(n, 1), Eigen::MatrixXd::Zero(n, 1),
               seed};
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dv = sdt * rng.normal(i + 1, 0);
    const double dw = sdt * rng.normal(i + 1, 1);
    y += (model.c * x + model.epsilon * model.g(x)) * dt + model.sigma * dw;
    x += model.a * x * dt + model.b * dv;
    if (!std::isfinite(x))
      throw NumericalError("simulate_perturbed: non-finite state at node " +
                           std::to_string(i + 1));
    out.x(i + 1, 0) = x;
    out.y(i + 1, 0) = y;
  }
  return out;
}

/// Scalar nonlinear simulation: dX = alpha(X)dt + eps beta(X)dV,
/// dY = h(X)dt + sigma dW, X_0 = 0.
inline PathPair simulate_nonlinear(const NonlinearModel& model,
                                   const TimeGrid& grid,
                                   const NoiseSeed& seed) {
  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt(), sdt = std::sqrt(dt);
  CounterRng rng(seed);
  PathPair out{grid, Eigen::MatrixXd::Zero(n, 1), Eigen::MatrixXd::Zero(n, 1),
               seed};
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dv = sdt * rng.normal(i + 1, 0);
    const double dw = sdt * rng.normal(i + 1, 1);
    y += model.h.f(x) * dt + model.sigma * dw;
    x += model.alpha.f(x) * dt + model.epsilon * model.beta.f(x) * dv;
    if (!std::isfinite(x))
      throw NumericalError("simulate_nonlinear: non-finite state at node " +
                           std::to_string(i + 1));
    out.x(i + 1, 0) = x;
    out.y(i + 1, 0) = y;
  }
  return out;
}

}  // namespace expfilt
