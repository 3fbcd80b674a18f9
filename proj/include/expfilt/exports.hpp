#pragma once

#include <sstream>
#include <string>

#include "expfilt/bench.hpp"
#include "expfilt/cov_kernel.hpp"
#include "expfilt/csv.hpp"
#include "expfilt/expansion.hpp"
#include "expfilt/kalman.hpp"
#include "expfilt/sde.hpp"
#include "expfilt/smoothing.hpp"

namespace expfilt {

/// Path export: one row per node, components flattened left to right.
inline std::string path_csv(const PathPair& path) {
  std::ostringstream os;
  os << "t";
  if (path.x.cols() == 1 && path.y.cols() == 1) {
    os << ",x,y\n";
  } else {
    for (int j = 0; j < path.x.cols(); ++j) os << ",x" << j;
    for (int j = 0; j < path.y.cols(); ++j) os << ",y" << j;
    os << "\n";
  }
  for (std::size_t i = 0; i < path.grid.n_nodes(); ++i) {
    os << fmt_double(path.grid.node(i));
    for (int j = 0; j < path.x.cols(); ++j)
      os << "," << fmt_double(path.x(static_cast<Eigen::Index>(i), j));
    for (int j = 0; j < path.y.cols(); ++j)
      os << "," << fmt_double(path.y(static_cast<Eigen::Index>(i), j));
    os << "\n";
  }
  return os.str();
}

/// Filter export: t, mu components, gamma entries (row-major).
inline std::string filter_csv(const FilterPath& filter) {
  std::ostringstream os;
  const int d = static_cast<int>(filter.mu[0].size());
  os << "t";
  if (d == 1) {
    os << ",mu,gamma\n";
  } else {
    for (int j = 0; j < d; ++j) os << ",mu" << j;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) os << ",gamma" << j << k;
    os << "\n";
  }
  for (std::size_t i = 0; i < filter.grid.n_nodes(); ++i) {
    os << fmt_double(filter.grid.node(i));
    for (int j = 0; j < d; ++j) os << "," << fmt_double(filter.mu[i](j));
    const Matrix& g = filter.gamma.at(i);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) os << "," << fmt_double(g(j, k));
    os << "\n";
  }
  return os.str();
}

/// Smoother export: s, smoothed mean components.
inline std::string smoother_csv(const SmootherState& sm) {
  std::ostringstream os;
  const int d = static_cast<int>(sm.mu_s_t[0].size());
  os << "s";
  if (d == 1) {
    os << ",mu_s_t\n";
  } else {
    for (int j = 0; j < d; ++j) os << ",mu_s_t" << j;
    os << "\n";
  }
  for (std::size_t s = 0; s <= sm.horizon_node; ++s) {
    os << fmt_double(sm.grid.node(s));
    for (int j = 0; j < d; ++j) os << "," << fmt_double(sm.mu_s_t[s](j));
    os << "\n";
  }
  return os.str();
}

/// Kernel export: s,u,k triples (scalar models; entry (0,0) otherwise).
inline std::string kernel_csv(const CovKernel& kernel) {
  std::ostringstream os;
  os << "s,u,k\n";
  for (std::size_t s = 0; s <= kernel.horizon_node(); ++s)
    for (std::size_t u = 0; u <= kernel.horizon_node(); ++u)
      os << fmt_double(kernel.grid().node(s)) << ","
         << fmt_double(kernel.grid().node(u)) << ","
         << fmt_double(kernel.at(s, u)(0, 0)) << "\n";
  return os.str();
}

/// Expansion export: t, raw coefficients, combined and clipped paths.
inline std::string expansion_csv(const ExpansionResult& res) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i <= res.order; ++i) os << ",n" << i;
  os << ",N_raw";
  for (const auto& [r, path] : res.clipped)
    os << ",N_clipped_r" << detail::r_label(r);
  os << "\n";
  for (std::size_t t = 0; t < res.grid.n_nodes(); ++t) {
    os << fmt_double(res.grid.node(t));
    for (int i = 0; i <= res.order; ++i)
      os << "," << fmt_double(res.n_raw[i][t]);
    os << "," << fmt_double(res.combined[t]);
    for (const auto& [r, path] : res.clipped) os << "," << fmt_double(path[t]);
    os << "\n";
  }
  return os.str();
}

}  // namespace expfilt
