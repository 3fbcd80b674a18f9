#pragma once

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "expfilt/aterm.hpp"
#include "expfilt/error.hpp"

namespace expfilt {

/// Constant scalar coefficients the term dynamics depend on.
struct ScalarCoeffs {
  double a = 0.0;
  double c = 0.0;
  double sigma = 1.0;
  double inv_s2() const { return 1.0 / (sigma * sigma); }
};

inline constexpr std::size_t kDefaultTermCap = 500;

/// d_t of one pure iterated integral (no outer monomial), written as a
/// drift polynomial (dt part) and a diffusion polynomial (dY - c mu dt
/// part) over A-terms. Implements the differentiation rule for the
/// smoothed-quantity integrands:
///   d_t mu_{s;t}        = (c/s2) gamma(s,t;t) dI_t
///   d_t gamma(s,t;t)    = {a - c^2 gamma(t)/s2} gamma(s,t;t) dt
///   d_t gamma(s,u;t)    = -(c^2/s2) gamma(s,t;t) gamma(u,t;t) dt
///   d_t dlam^{(1)}_s    = -(c^2/s2) gamma(s,t;t) ds dI_t
/// plus the moving upper limit and the Ito corrections: pairwise
/// cross-variations of the stochastic entries, and the boundary sliver
/// against the outermost dY measure ((dI_t)^2 = s2 dt).
inline void differentiate_aterm(const ATerm& term, const ScalarCoeffs& mc,
                                TermPolynomial& drift,
                                TermPolynomial& diffusion) {
  if (term.n < 1 || term.has_outer())
    throw ContractError("differentiate_aterm: need a pure integral term");
  const int n = term.n;
  const int L = n - 1;  // outermost level
  const double c = mc.c, a = mc.a, s2inv = mc.inv_s2();

  // Boundary term: evaluate level L at t. p_L lands on mu_{t;t},
  // q_L and r_LL on gamma(t), r_iL joins q_i.
  ATerm bnd;
  bnd.n = L;
  bnd.p.assign(term.p.begin(), term.p.begin() + L);
  bnd.q.assign(term.q.begin(), term.q.begin() + L);
  bnd.alpha.assign(term.alpha.begin(), term.alpha.begin() + L);
  bnd.r.assign(ATerm::rsize(L), 0);
  for (int i = 0; i < L; ++i) {
    bnd.q[i] += term.r_at(i, L);
    for (int j = i; j < L; ++j) bnd.r[bnd.ridx(i, j)] = term.r_at(i, j);
  }
  bnd.outer_mu = term.p[L];
  bnd.outer_gamma = term.q[L] + term.r_at(L, L);
  const bool outer_dy = term.alpha[L] == 1;
  (outer_dy ? diffusion : drift).add(bnd, 1.0);

  // Boundary sliver corrections: the dY part of the outermost measure
  // against the stochastic atoms of the integrand evaluated at t_L = t.
  if (outer_dy) {
    if (bnd.outer_mu >= 1) {
      ATerm t2 = bnd;
      t2.outer_mu -= 1;
      t2.outer_gamma += 1;
      drift.add(t2, static_cast<double>(bnd.outer_mu) * c);
    }
    for (int i = 0; i < L; ++i) {
      if (term.p[i] >= 1) {
        ATerm t2 = bnd;
        t2.p[i] -= 1;
        t2.q[i] += 1;
        drift.add(t2, static_cast<double>(term.p[i]) * c);
      }
      if (term.alpha[i] == 1) {
        ATerm t2 = bnd;
        t2.alpha[i] = 0;
        t2.q[i] += 1;
        drift.add(t2, -c * c);
      }
    }
  }

  // Interior first-order events. Stochastic ones (volatility against
  // dI_t) are collected for the pairwise Ito corrections below.
  struct Stoch {
    ATerm term;
    double vol;     // coefficient of dI_t
    bool mu_event;  // true: mu-power event; false: measure event
    int level;
  };
  std::vector<Stoch> stoch;

  for (int i = 0; i < n; ++i) {
    if (term.p[i] >= 1) {  // mu_{t_i;t} power
      ATerm t2 = term;
      t2.p[i] -= 1;
      t2.q[i] += 1;
      const double vol = static_cast<double>(term.p[i]) * c * s2inv;
      diffusion.add(t2, vol);
      stoch.push_back({t2, vol, true, i});
    }
    if (term.q[i] >= 1) {  // gamma(t_i,t;t) power: deterministic growth
      drift.add(term, static_cast<double>(term.q[i]) * a);
      ATerm t2 = term;
      t2.outer_gamma += 1;
      drift.add(t2, -static_cast<double>(term.q[i]) * c * c * s2inv);
    }
    if (term.alpha[i] == 1) {  // measure dlam^{(1)} -> ds with new factor
      ATerm t2 = term;
      t2.alpha[i] = 0;
      t2.q[i] += 1;
      const double vol = -c * c * s2inv;
      diffusion.add(t2, vol);
      stoch.push_back({t2, vol, false, i});
    }
    for (int j = i; j < n; ++j) {  // gamma(t_i,t_j;t) powers
      const int rij = term.r_at(i, j);
      if (rij >= 1) {
        ATerm t2 = term;
        t2.r[t2.ridx(i, j)] -= 1;
        t2.q[i] += 1;
        t2.q[j] += 1;
        drift.add(t2, -static_cast<double>(rij) * c * c * s2inv);
      }
    }
  }

  // Ito corrections between interior stochastic events. A mu power of
  // p_i acts as p_i identical first-order events, so the self pair gets
  // the C(p_i, 2) weight; the recorded vol already carries one factor
  // p_i, hence the (p_i - 1)/(2 p_i) correction below.
  const double s2 = mc.sigma * mc.sigma;
  for (std::size_t u = 0; u < stoch.size(); ++u) {
    for (std::size_t v = u; v < stoch.size(); ++v) {
      double coeff;
      ATerm combined;
      if (u == v) {
        // Only mu powers self-pair; the measure occurs once per level.
        // Recorded vol = p_i * unit, so C(p_i,2) unit^2 = vol^2 (p-1)/(2p).
        if (!stoch[u].mu_event) continue;
        const int level = stoch[u].level;
        const int pi = term.p[level];
        if (pi < 2) continue;
        coeff = stoch[u].vol * stoch[u].vol * (pi - 1) / (2.0 * pi) * s2;
        combined = stoch[u].term;
        combined.p[level] -= 1;
        combined.q[level] += 1;
      } else {
        coeff = stoch[u].vol * stoch[v].vol * s2;
        // apply v's modification on top of u's
        combined = stoch[u].term;
        for (int i = 0; i < n; ++i) {
          combined.p[i] += stoch[v].term.p[i] - term.p[i];
          combined.q[i] += stoch[v].term.q[i] - term.q[i];
          combined.alpha[i] += stoch[v].term.alpha[i] - term.alpha[i];
        }
      }
      drift.add(combined, coeff);
    }
  }
}

/// Closed SDE system over A-term states. States are pure integrals;
/// drift/diffusion polynomials may reference states scaled by outer
/// (mu_{t;t}, gamma(t)) monomials and bare depth-0 monomials, both of
/// which are evaluated from the filter at integration time.
struct TermSystem {
  ScalarCoeffs coeffs;
  std::vector<ATerm> states;            // canonical order
  std::vector<TermPolynomial> drift;     // per state
  std::vector<TermPolynomial> diffusion; // per state
  int generation_passes = 0;

  std::size_t size() const { return states.size(); }

  std::size_t index_of(const ATerm& t) const {
    const ATerm key = t.integral_part();
    auto it = std::lower_bound(states.begin(), states.end(), key);
    if (it == states.end() || !(*it == key))
      throw ContractError("TermSystem: state not found: " + key.to_string());
    return static_cast<std::size_t>(it - states.begin());
  }

  /// Human-readable dump with stable ordering, suitable for golden-file
  /// comparison.
  std::string dump() const {
    std::ostringstream os;
    os.precision(15);
    os << "term system: " << states.size() << " states\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
      os << "state " << i << ": " << states[i].to_string() << "\n";
      os << "  drift: " << drift[i].to_string() << "\n";
      os << "  diffusion: " << diffusion[i].to_string() << "\n";
    }
    return os.str();
  }
};

/// Repeatedly differentiates every integral term reachable from the
/// seeds until the system closes. Throws when the state count passes
/// `term_cap`, reporting the generation pass.
inline TermSystem derive_closure(const std::vector<TermPolynomial>& seeds,
                                 const ScalarCoeffs& coeffs,
                                 std::size_t term_cap = kDefaultTermCap) {
  std::set<ATerm> known;
  std::deque<ATerm> frontier;
  auto enqueue = [&](const ATerm& t) {
    if (t.n < 1) return;  // depth-0 monomials come from the filter
    const ATerm key = t.integral_part();
    if (known.insert(key).second) frontier.push_back(key);
  };
  for (const auto& poly : seeds)
    for (const auto& [t, c] : poly.terms()) enqueue(t);

  std::vector<std::pair<ATerm, std::pair<TermPolynomial, TermPolynomial>>> dyn;
  int pass = 0;
  while (!frontier.empty()) {
    ++pass;
    std::deque<ATerm> batch;
    std::swap(batch, frontier);
    for (const ATerm& state : batch) {
      TermPolynomial drift, diffusion;
      differentiate_aterm(state, coeffs, drift, diffusion);
      for (const auto& [t, c] : drift.terms()) enqueue(t);
      for (const auto& [t, c] : diffusion.terms()) enqueue(t);
      dyn.emplace_back(state, std::make_pair(std::move(drift),
                                             std::move(diffusion)));
      if (known.size() > term_cap)
        throw NumericalError(
            "derive_closure: closure overflow at generation pass " +
            std::to_string(pass) + ": " + std::to_string(known.size()) +
            " states exceed term cap " + std::to_string(term_cap));
    }
  }

  TermSystem sys;
  sys.coeffs = coeffs;
  sys.generation_passes = pass;
  sys.states.assign(known.begin(), known.end());
  sys.drift.resize(sys.states.size());
  sys.diffusion.resize(sys.states.size());
  for (auto& [state, dd] : dyn) {
    const std::size_t idx = sys.index_of(state);
    sys.drift[idx] = std::move(dd.first);
    sys.diffusion[idx] = std::move(dd.second);
  }
  return sys;
}

}  // namespace expfilt
