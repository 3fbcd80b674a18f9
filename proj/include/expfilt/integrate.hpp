#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "expfilt/aterm.hpp"
#include "expfilt/closure.hpp"
#include "expfilt/error.hpp"
#include "expfilt/time_grid.hpp"

namespace expfilt {

namespace detail {

inline double pow_int(double x, int k) {
  double v = 1.0;
  for (; k > 0; --k) v *= x;
  return v;
}

}  // namespace detail

/// Term system flattened for fast Euler-Maruyama stepping. References
/// are (coefficient, mu power, gamma power, state index) tuples; index
/// -1 denotes a bare depth-0 monomial.
class CompiledSystem {
 public:
  struct Ref {
    double coeff;
    int om, og;
    int state;
  };
  struct Poly {
    std::vector<Ref> refs;

    double eval(double mu, double gamma, const double* s) const {
      double acc = 0.0;
      for (const Ref& r : refs)
        acc += r.coeff * detail::pow_int(mu, r.om) *
               detail::pow_int(gamma, r.og) * (r.state < 0 ? 1.0 : s[r.state]);
      return acc;
    }
  };

  explicit CompiledSystem(const TermSystem& sys) : sys_(&sys) {
    drift_.reserve(sys.size());
    diffusion_.reserve(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i) {
      drift_.push_back(compile(sys.drift[i]));
      diffusion_.push_back(compile(sys.diffusion[i]));
    }
  }

  Poly compile(const TermPolynomial& poly) const {
    Poly out;
    out.refs.reserve(poly.size());
    for (const auto& [t, c] : poly.terms()) {
      Ref r{c, t.outer_mu, t.outer_gamma, -1};
      if (t.n > 0) r.state = static_cast<int>(sys_->index_of(t));
      out.refs.push_back(r);
    }
    return out;
  }

  std::size_t n_states() const { return drift_.size(); }
  const Poly& drift(std::size_t i) const { return drift_[i]; }
  const Poly& diffusion(std::size_t i) const { return diffusion_[i]; }
  const TermSystem& system() const { return *sys_; }

 private:
  const TermSystem* sys_;
  std::vector<Poly> drift_, diffusion_;
};

/// Joint Euler-Maruyama integration of every state in the system along
/// one observed path, zero initial conditions. mu and gamma are the
/// filter mean and forward Riccati variance on the same grid. Calls
/// `visit(node, states)` after each node (including node 0).
template <typename Visitor>
void integrate_closure_visit(const CompiledSystem& cs, const TimeGrid& grid,
                             const double* y, const double* mu,
                             const double* gamma, Visitor&& visit) {
  const std::size_t n = grid.n_nodes();
  const double dt = grid.dt();
  const double c = cs.system().coeffs.c;
  const std::size_t m = cs.n_states();

  std::vector<double> s(m, 0.0), snew(m);
  visit(std::size_t{0}, s.data());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double di = (y[i + 1] - y[i]) - c * mu[i] * dt;
    for (std::size_t k = 0; k < m; ++k) {
      snew[k] = s[k] + cs.drift(k).eval(mu[i], gamma[i], s.data()) * dt +
                cs.diffusion(k).eval(mu[i], gamma[i], s.data()) * di;
      if (!std::isfinite(snew[k]))
        throw NumericalError("integrate_closure: non-finite state " +
                             cs.system().states[k].to_string() + " at node " +
                             std::to_string(i + 1));
    }
    std::swap(s, snew);
    visit(i + 1, s.data());
  }
}

/// Full per-state history, for tests and the term-system dump tooling.
inline std::vector<std::vector<double>> integrate_closure(
    const TermSystem& sys, const TimeGrid& grid, const double* y,
    const double* mu, const double* gamma) {
  CompiledSystem cs(sys);
  std::vector<std::vector<double>> out(sys.size(),
                                       std::vector<double>(grid.n_nodes()));
  integrate_closure_visit(cs, grid, y, mu, gamma,
                          [&](std::size_t node, const double* s) {
                            for (std::size_t k = 0; k < sys.size(); ++k)
                              out[k][node] = s[k];
                          });
  return out;
}

inline constexpr std::size_t kOracleNodeCap = 4096;

/// Independent evaluation of pure integral A-terms by direct grid
/// quadrature: maintains the smoothed means mu_{s;t}, the rows
/// gamma(s,t;t), the diagonal V[xi_{s;t}] (and the full pair kernel when
/// a term couples two levels) with the fixed-point smoother evolutions,
/// then evaluates every term as a left-endpoint sum over the ordered
/// simplex. O(n^2) per depth-1 term, O(n^3) with pair coupling; meant
/// for desk-scale verification only.
///
/// Left-endpoint sums of a non-adapted integrand carry an O(sqrt(dt))
/// quadratic-variation fluctuation relative to the compensated object
/// the term dynamics define, so verification against a coarser solver
/// should run this oracle on a refinement of the same observed path and
/// compare at the shared horizons: `eval_stride` selects every k-th
/// node for output.
inline std::vector<std::vector<double>> quadrature_oracle(
    const std::vector<ATerm>& terms, const ScalarCoeffs& mc,
    const TimeGrid& grid, const double* y, const double* mu,
    const double* gamma, std::size_t eval_stride = 1,
    std::size_t node_cap = kOracleNodeCap) {
  const std::size_t n = grid.n_nodes();
  if (eval_stride < 1 || (n - 1) % eval_stride != 0)
    throw ContractError("quadrature_oracle: stride must divide the step count");
  if (n > node_cap)
    throw ContractError("quadrature_oracle: grid exceeds dense node cap " +
                        std::to_string(node_cap));
  bool need_pairs = false;
  for (const ATerm& t : terms) {
    if (t.n < 1 || t.has_outer())
      throw ContractError("quadrature_oracle: need pure integral terms");
    for (int i = 0; i < t.n; ++i)
      for (int j = i + 1; j < t.n; ++j)
        if (t.r_at(i, j) > 0) need_pairs = true;
    if (t.n > 2)
      for (int i = 0; i < t.n; ++i)
        for (int j = i + 1; j < t.n; ++j)
          if (t.r_at(i, j) > 0)
            throw ContractError(
                "quadrature_oracle: pair coupling beyond depth 2 unsupported");
  }

  const double dt = grid.dt();
  const double c = mc.c, a = mc.a, s2inv = mc.inv_s2();

  std::vector<double> mu_s(n), m_row(n), diag(n);
  std::vector<std::vector<double>> kfull;
  if (need_pairs) kfull.assign(n, {});
  mu_s[0] = mu[0];
  m_row[0] = gamma[0];
  diag[0] = gamma[0];
  if (need_pairs) kfull[0] = {gamma[0]};

  const std::size_t n_out = (n - 1) / eval_stride + 1;
  std::vector<std::vector<double>> out(terms.size(),
                                       std::vector<double>(n_out, 0.0));

  // weights for one level of one term at the current horizon
  std::vector<double> w, prefix;
  w.reserve(n);
  prefix.reserve(n + 1);

  auto eval_terms = [&](std::size_t T) {
    const std::size_t slot = T / eval_stride;
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
      const ATerm& t = terms[ti];
      const int depth = t.n;
      auto weight = [&](int level, std::size_t s) {
        double v = detail::pow_int(mu_s[s], t.p[level]) *
                   detail::pow_int(m_row[s], t.q[level]) *
                   detail::pow_int(diag[s], t.r_at(level, level));
        v *= t.alpha[level] == 1 ? ((y[s + 1] - y[s]) - c * mu_s[s] * dt) : dt;
        return v;
      };
      if (depth == 2 && t.r_at(0, 1) > 0) {
        const int r12 = t.r_at(0, 1);
        double acc = 0.0;
        for (std::size_t s2 = 1; s2 < T; ++s2) {
          double inner = 0.0;
          for (std::size_t s1 = 0; s1 < s2; ++s1)
            inner += weight(0, s1) * detail::pow_int(kfull[s2][s1], r12);
          acc += weight(1, s2) * inner;
        }
        out[ti][slot] = acc;
        continue;
      }
      // factorized nested prefix sums over the strict simplex
      prefix.assign(T + 1, 0.0);
      for (std::size_t s = 0; s < T; ++s)
        prefix[s + 1] = prefix[s] + weight(0, s);
      for (int level = 1; level < depth; ++level) {
        // prefix[v] currently holds S_{level-1}(v) = sum_{s<v} ...
        double run = 0.0;
        std::vector<double> next(T + 1, 0.0);
        for (std::size_t s = 0; s < T; ++s) {
          run += weight(level, s) * prefix[s];
          next[s + 1] = run;
        }
        prefix.swap(next);
      }
      out[ti][slot] = prefix[T];
    }
  };

  eval_terms(0);
  for (std::size_t T = 0; T + 1 < n; ++T) {
    const double di = (y[T + 1] - y[T]) - c * mu[T] * dt;
    const double theta = a - c * c * gamma[T] * s2inv;
    if (need_pairs) {
      for (std::size_t s = 0; s <= T; ++s)
        for (std::size_t u = 0; u <= s; ++u)
          kfull[s][u] -= c * c * s2inv * m_row[s] * m_row[u] * dt;
    }
    for (std::size_t s = 0; s <= T; ++s) {
      mu_s[s] += c * s2inv * m_row[s] * di;
      diag[s] -= c * c * s2inv * m_row[s] * m_row[s] * dt;
      m_row[s] *= 1.0 + theta * dt;
    }
    mu_s[T + 1] = mu[T + 1];
    m_row[T + 1] = gamma[T + 1];
    diag[T + 1] = gamma[T + 1];
    if (need_pairs) {
      kfull[T + 1].resize(T + 2);
      for (std::size_t u = 0; u <= T; ++u) kfull[T + 1][u] = m_row[u];
      kfull[T + 1][T + 1] = gamma[T + 1];
    }
    if ((T + 1) % eval_stride == 0) eval_terms(T + 1);
  }
  return out;
}

}  // namespace expfilt
