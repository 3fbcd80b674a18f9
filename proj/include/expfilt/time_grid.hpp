#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "expfilt/error.hpp"

namespace expfilt {

/// Uniform time discretization of [t0, t0 + n_steps*dt].
/// Node i sits at t0 + i*dt; every path or kernel indexed on the grid
/// has n_steps+1 entries.
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, std::size_t n_steps)
      : t0_(t0), dt_(dt), n_steps_(n_steps) {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw ContractError("TimeGrid: dt must be positive and finite");
    if (n_steps < 1) throw ContractError("TimeGrid: n_steps must be >= 1");
    if (!std::isfinite(t0)) throw ContractError("TimeGrid: t0 must be finite");
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return n_steps_ + 1; }
  double node(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
  double horizon() const { return node(n_steps_); }

  std::vector<double> nodes() const {
    std::vector<double> ts(n_nodes());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = node(i);
    return ts;
  }

  bool operator==(const TimeGrid& o) const {
    return t0_ == o.t0_ && dt_ == o.dt_ && n_steps_ == o.n_steps_;
  }
  bool operator!=(const TimeGrid& o) const { return !(*this == o); }

 private:
  double t0_;
  double dt_;
  std::size_t n_steps_;
};

}  // namespace expfilt
