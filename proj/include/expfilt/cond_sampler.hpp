#pragma once

#include <Eigen/Dense>
#include <vector>

#include "expfilt/cov_kernel.hpp"
#include "expfilt/error.hpp"
#include "expfilt/models.hpp"
#include "expfilt/riccati.hpp"
#include "expfilt/rng.hpp"

namespace expfilt {

/// Samples paths from the conditional law of the signal given the
/// observations up to a fixed horizon:
///   zeta_{s;t} = E[X_s] + xi_{s;t}
///     + int_0^t K(s,u) c^T (sigma sigma^T)^{-1} (dY_u - c E[X_u] du),
/// where xi solves d xi = {a + b b^T phi(s;t)} xi ds + b dV~ with
/// xi_0 ~ N(0, S^{1/2}(I - S^{1/2} phi(0;t) S^{1/2})^{-1} S^{1/2}),
/// S = x0_cov. The correction integral is a grid quadrature against the
/// dense kernel rows and is shared by all samples.
class ConditionalSampler {
 public:
  ConditionalSampler(const LinearGaussianModel& model,
                     const RiccatiBackward& phi, const CovKernel& kernel,
                     const Eigen::MatrixXd& y_path)
      : model_(model), phi_(phi), horizon_(kernel.horizon_node()) {
    const TimeGrid& grid = model.grid();
    if (phi.grid != grid || kernel.grid() != grid)
      throw ContractError("ConditionalSampler: grid mismatch");
    if (phi.horizon_node != horizon_)
      throw ContractError(
          "ConditionalSampler: phi and kernel horizons disagree");
    if (static_cast<std::size_t>(y_path.rows()) != grid.n_nodes())
      throw ContractError("ConditionalSampler: observation path mismatch");

    const double dt = grid.dt();
    const int d1 = model.dim_x();

    // Prior mean E[X_s] by RK4 of dE/ds = a(s) E.
    prior_mean_.resize(horizon_ + 1);
    Vector m = model.x0_mean();
    prior_mean_[0] = m;
    for (std::size_t i = 0; i < horizon_; ++i) {
      const Vector k1 = model.a(i) * m;
      const Vector k2 = model.a_mid(i) * (m + 0.5 * dt * k1);
      const Vector k3 = model.a_mid(i) * (m + 0.5 * dt * k2);
      const Vector k4 = model.a(i + 1) * (m + dt * k3);
      m += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      prior_mean_[i + 1] = m;
    }

    // Centered observation increments against the prior mean.
    std::vector<Vector> dtil(horizon_);
    for (std::size_t u = 0; u < horizon_; ++u) {
      const Vector dy = (y_path.row(u + 1) - y_path.row(u)).transpose();
      const Matrix ss = model.sigma_sq(u);
      dtil[u] = model.c(u).transpose() *
                ss.ldlt().solve(dy - model.c(u) * prior_mean_[u] * dt);
    }

    // Shared correction path: corr(s) = sum_u K(s,u) dtil_u.
    correction_.assign(horizon_ + 1, Vector::Zero(d1));
    for (std::size_t s = 0; s <= horizon_; ++s)
      for (std::size_t u = 0; u < horizon_; ++u)
        correction_[s] += kernel.at(s, u) * dtil[u];

    // Square root of V[xi_0].
    const Matrix& S = model.x0_cov();
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    const Matrix sqrtS = es.operatorSqrt();
    const Matrix inner =
        Matrix::Identity(d1, d1) - sqrtS * phi.at(0) * sqrtS;
    const Matrix v0 = sqrtS * inner.ldlt().solve(sqrtS);
    Eigen::SelfAdjointEigenSolver<Matrix> ev(detail::sym(v0));
    if (ev.eigenvalues().minCoeff() < -1e-10 * (1.0 + v0.norm()))
      throw NumericalError("ConditionalSampler: V[xi_0] not PSD");
    xi0_sqrt_ = ev.operatorSqrt();

    // Per-step drift matrices for the xi equation.
    xi_step_.resize(horizon_);
    for (std::size_t i = 0; i < horizon_; ++i)
      xi_step_[i] = Matrix::Identity(d1, d1) +
                    (model.a(i) + model.b(i) * model.b(i).transpose() *
                                      phi.at(i)) * dt;
  }

  /// Conditional mean path by kernel quadrature, E[X_s] + corr(s).
  std::vector<Vector> mean_path() const {
    std::vector<Vector> out(horizon_ + 1);
    for (std::size_t s = 0; s <= horizon_; ++s)
      out[s] = prior_mean_[s] + correction_[s];
    return out;
  }

  /// One conditional sample path on nodes 0..horizon. Fresh noise,
  /// independent of the conditioning observations.
  Eigen::MatrixXd sample(const NoiseSeed& seed) const {
    const TimeGrid& grid = model_.grid();
    const int d1 = model_.dim_x(), m1 = model_.dim_v();
    const double sdt = std::sqrt(grid.dt());
    CounterRng rng(seed);

    Vector z(d1);
    for (int j = 0; j < d1; ++j)
      z(j) = rng.normal(0, static_cast<std::uint32_t>(m1 + j));
    Vector xi = xi0_sqrt_ * z;

    Eigen::MatrixXd out(horizon_ + 1, d1);
    out.row(0) = (prior_mean_[0] + xi + correction_[0]).transpose();
    Vector dv(m1);
    for (std::size_t i = 0; i < horizon_; ++i) {
      for (int j = 0; j < m1; ++j)
        dv(j) = sdt * rng.normal(i + 1, static_cast<std::uint32_t>(j));
      xi = xi_step_[i] * xi + model_.b(i) * dv;
      out.row(i + 1) = (prior_mean_[i + 1] + xi + correction_[i + 1]).transpose();
    }
    return out;
  }

 private:
  const LinearGaussianModel& model_;
  const RiccatiBackward& phi_;
  std::size_t horizon_;
  std::vector<Vector> prior_mean_;
  std::vector<Vector> correction_;
  Matrix xi0_sqrt_;
  std::vector<Matrix> xi_step_;
};

/// Single-shot convenience wrapper.
inline Eigen::MatrixXd sample_conditional_path(const LinearGaussianModel& model,
                                               const RiccatiBackward& phi,
                                               const CovKernel& kernel,
                                               const Eigen::MatrixXd& y_path,
                                               const NoiseSeed& seed) {
  return ConditionalSampler(model, phi, kernel, y_path).sample(seed);
}

}  // namespace expfilt
