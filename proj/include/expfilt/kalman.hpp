#pragma once

#include <Eigen/Dense>
#include <vector>

#include "expfilt/error.hpp"
#include "expfilt/models.hpp"
#include "expfilt/riccati.hpp"
#include "expfilt/sde.hpp"

namespace expfilt {

/// Filtered mean path mu_{t;t} together with the forward Riccati
/// covariance it was computed with.
struct FilterPath {
  TimeGrid grid;
  std::vector<Vector> mu;  // per node
  RiccatiForward gamma;
};

/// Kalman-Bucy filter by Euler-Maruyama:
///   mu_{i+1} = mu_i + a mu_i dt + gamma_i c^T (sigma sigma^T)^{-1}
///              (dY_i - c mu_i dt),  mu_0 = x0_mean.
inline FilterPath kalman_bucy(const LinearGaussianModel& model,
                              const RiccatiForward& gamma,
                              const Eigen::MatrixXd& y_path) {
  const TimeGrid& grid = model.grid();
  if (gamma.grid != grid)
    throw ContractError("kalman_bucy: Riccati solution grid mismatch");
  if (static_cast<std::size_t>(y_path.rows()) != grid.n_nodes() ||
      y_path.cols() != model.dim_y())
    throw ContractError("kalman_bucy: observation path does not match grid");

  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt();
  FilterPath out{grid, {}, gamma};
  out.mu.reserve(n);
  Vector mu = model.x0_mean();
  out.mu.push_back(mu);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Matrix ss = model.sigma_sq(i);
    const Vector dy = (y_path.row(i + 1) - y_path.row(i)).transpose();
    const Vector innov = dy - model.c(i) * mu * dt;
    mu += model.a(i) * mu * dt +
          gamma.at(i) * model.c(i).transpose() * ss.ldlt().solve(innov);
    out.mu.push_back(mu);
  }
  return out;
}

inline FilterPath kalman_bucy(const LinearGaussianModel& model,
                              const Eigen::MatrixXd& y_path) {
  return kalman_bucy(model, solve_gamma(model), y_path);
}

/// Scalar fast path used by the expansion and the benchmark harness.
/// gamma must hold the forward Riccati values on the same grid.
inline std::vector<double> kalman_bucy_scalar(double a, double c, double sigma,
                                              const TimeGrid& grid,
                                              const std::vector<double>& gamma,
                                              const double* y, double mu0 = 0.0) {
  const std::size_t n = grid.n_nodes();
  if (gamma.size() != n)
    throw ContractError("kalman_bucy_scalar: gamma size mismatch");
  const double dt = grid.dt();
  const double inv_s2 = 1.0 / (sigma * sigma);
  std::vector<double> mu(n);
  mu[0] = mu0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dy = y[i + 1] - y[i];
    mu[i + 1] = mu[i] + a * mu[i] * dt +
                gamma[i] * c * inv_s2 * (dy - c * mu[i] * dt);
  }
  return mu;
}

/// Scalar forward Riccati by RK4 (constant coefficients), shared by all
/// benchmark paths since gamma is deterministic.
inline std::vector<double> solve_gamma_scalar(double a, double b, double c,
                                              double sigma,
                                              const TimeGrid& grid,
                                              double gamma0 = 0.0) {
  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt();
  const double c2s = c * c / (sigma * sigma);
  std::vector<double> g(n);
  g[0] = gamma0;
  auto f = [&](double v) { return -c2s * v * v + 2.0 * a * v + b * b; };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double k1 = f(g[i]);
    const double k2 = f(g[i] + 0.5 * dt * k1);
    const double k3 = f(g[i] + 0.5 * dt * k2);
    const double k4 = f(g[i] + dt * k3);
    g[i + 1] = g[i] + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (g[i + 1] < -1e-12)
      throw NumericalError("solve_gamma_scalar: negative variance at node " +
                           std::to_string(i + 1));
  }
  return g;
}

}  // namespace expfilt
