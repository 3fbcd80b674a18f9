#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "expfilt/error.hpp"
#include "expfilt/models.hpp"
#include "expfilt/riccati.hpp"

namespace expfilt {

/// Dense conditional cross-covariance kernel
///   K(s, u) = Cov(xi_{s;t}, xi_{u;t})
/// over all node pairs s, u <= horizon t. Desk-scale object: storage is
/// O(n^2) blocks, guarded by a node cap.
class CovKernel {
 public:
  static constexpr std::size_t kDefaultNodeCap = 4096;

  CovKernel(TimeGrid grid, std::size_t horizon_node, int dim)
      : grid_(std::move(grid)), horizon_(horizon_node), dim_(dim),
        blocks_((horizon_node + 1) * (horizon_node + 2) / 2) {}

  std::size_t horizon_node() const { return horizon_; }
  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }

  /// K(s, u); stored for u <= s, transposed on access otherwise.
  Matrix at(std::size_t s, std::size_t u) const {
    if (s < u) return blocks_[idx(u, s)].transpose();
    return blocks_[idx(s, u)];
  }

  Matrix& lower(std::size_t s, std::size_t u) {
    if (u > s) throw ContractError("CovKernel::lower: need u <= s");
    return blocks_[idx(s, u)];
  }
  const Matrix& lower(std::size_t s, std::size_t u) const {
    return blocks_[idx(s, u)];
  }

 private:
  std::size_t idx(std::size_t s, std::size_t u) const {
    return s * (s + 1) / 2 + u;
  }

  TimeGrid grid_;
  std::size_t horizon_;
  int dim_;
  std::vector<Matrix> blocks_;
};

/// Builds the dense kernel at a fixed horizon from the forward Riccati
/// solution. With the cross-covariance rows
///   M(v,u) = Q(v,u) gamma(u),  Q(u,u) = I,
///   Q(v+1,u) = (I + F_v dt) Q(v,u) for v > u,  Q(u+1,u) = I,
/// where F = a - gamma c^T (sigma sigma^T)^{-1} c, the kernel is, for
/// u <= s,
///   K(s,u;t) = M(s,u) - gamma(s) [ sum_{v=s}^{t-1} Q(v,s)^T C_v Q(v,u) dt ]
///              gamma(u).
/// The grid form of the horizon correction integral starts the cross-row
/// propagators one node after their own creation, so K(t,t) = gamma(t)
/// holds exactly and the row quadrature telescopes against the filter's
/// left-endpoint gains.
inline CovKernel cov_kernel(const LinearGaussianModel& model,
                            const RiccatiForward& gamma,
                            std::size_t horizon_node,
                            std::size_t node_cap = CovKernel::kDefaultNodeCap) {
  const TimeGrid& grid = model.grid();
  if (gamma.grid != grid)
    throw ContractError("cov_kernel: Riccati solution grid mismatch");
  if (horizon_node >= grid.n_nodes())
    throw ContractError("cov_kernel: horizon is not a grid node");
  if (horizon_node + 1 > node_cap)
    throw ContractError("cov_kernel: horizon " + std::to_string(horizon_node) +
                        " exceeds dense node cap " + std::to_string(node_cap));

  const std::size_t T = horizon_node;
  const double dt = grid.dt();
  const int d = model.dim_x();
  const Matrix id = Matrix::Identity(d, d);

  std::vector<Matrix> F(T + 1), C(T + 1);
  for (std::size_t i = 0; i <= T; ++i) {
    C[i] = detail::obs_precision(model.c(i), model.sigma(i));
    F[i] = model.a(i) - gamma.at(i) * C[i];
  }

  // Triangular propagator table Q(s,u) for u <= s.
  auto tidx = [](std::size_t s, std::size_t u) { return s * (s + 1) / 2 + u; };
  std::vector<Matrix> Q((T + 1) * (T + 2) / 2);
  for (std::size_t u = 0; u <= T; ++u) {
    Q[tidx(u, u)] = id;
    if (u + 1 <= T) Q[tidx(u + 1, u)] = id;
  }
  for (std::size_t s = 1; s < T; ++s) {
    const Matrix step = id + F[s] * dt;
    for (std::size_t u = 0; u < s; ++u) Q[tidx(s + 1, u)] = step * Q[tidx(s, u)];
  }

  // Backward accumulation of the correction sum W(s,u) =
  // sum_{v>=s} Q(v,s)^T C_v Q(v,u) dt, overwritten into the kernel
  // blocks as soon as each row s is complete. The shifted propagator
  // start gives the recursion a one-row lag:
  //   W(s,u) = C_s Q(s,u) dt + (I + F_{s+1} dt)^T W(s+1,u+? ) ...
  // handled below by carrying the previous two rows.
  CovKernel K(grid, T, d);
  for (std::size_t u = 0; u <= T; ++u) K.lower(T, u) = Q[tidx(T, u)] * gamma.at(u);
  // Wnext[u] holds W(s+1, u) for the row currently being produced.
  std::vector<Matrix> Wrow(T + 1, Matrix::Zero(d, d));
  std::vector<Matrix> Wnext(T + 1, Matrix::Zero(d, d));
  for (std::size_t s = T; s-- > 0;) {
    // W(s,u) = C_s Q(s,u) dt + sum_{v>=s+1} Q(v,s)^T C_v Q(v,u) dt and
    // Q(v,s) = Q(v,s+1) for v >= s+1 except v = s+1 where both are I,
    // so the tail equals W(s+1,u) evaluated with Q-rows of column s+1.
    for (std::size_t u = 0; u <= s; ++u)
      Wrow[u] = C[s] * Q[tidx(s, u)] * dt + Wnext[u];
    for (std::size_t u = 0; u <= s; ++u)
      K.lower(s, u) =
          Q[tidx(s, u)] * gamma.at(u) - gamma.at(s) * Wrow[u] * gamma.at(u);
    std::swap(Wrow, Wnext);
    // prepare W(s, u) tail for the next (lower) row: propagate by F_s
    for (std::size_t u = 0; u <= s; ++u)
      Wnext[u] = (id + F[s] * dt).transpose() * Wnext[u];
  }
  return K;
}

inline CovKernel cov_kernel(const LinearGaussianModel& model,
                            std::size_t horizon_node,
                            std::size_t node_cap = CovKernel::kDefaultNodeCap) {
  return cov_kernel(model, solve_gamma(model), horizon_node, node_cap);
}

}  // namespace expfilt
