#pragma once

#include <map>
#include <string>
#include <vector>

#include "expfilt/aterm.hpp"
#include "expfilt/closure.hpp"
#include "expfilt/error.hpp"
#include "expfilt/models.hpp"

namespace expfilt {

/// The expansion inputs J_t^i(X_t) and J_t^i(1) for i = 0..order,
/// expressed as A-term polynomials.
struct JTerms {
  int order = 0;
  std::vector<TermPolynomial> j_x;    // J^i(X_t)
  std::vector<TermPolynomial> j_one;  // J^i(1)
};

namespace detail {

// Symbolic Wick expansion over the time slots of one iterated integral.
// Slot k < L is t_{k+1}; slot L is the outer time t. A monomial in the
// Gaussian means/covariances maps onto ATerm exponents:
//   mean(k<L) -> p_k, mean(L) -> outer_mu,
//   cov(k,l<L) -> r_{kl}, cov(k<L, L) -> q_k, cov(L,L) -> outer_gamma.
struct SymWick {
  int L;                      // number of integral levels
  std::size_t monomial_cap;   // abort guard for degenerate inputs
  std::map<std::vector<int>, TermPolynomial> memo;

  explicit SymWick(int levels, std::size_t cap)
      : L(levels), monomial_cap(cap) {}

  TermPolynomial mean_bump(const TermPolynomial& poly, int slot) const {
    TermPolynomial out;
    for (const auto& [t, c] : poly.terms()) {
      ATerm t2 = t;
      if (slot < L)
        t2.p[slot] += 1;
      else
        t2.outer_mu += 1;
      out.add(t2, c);
    }
    return out;
  }

  TermPolynomial cov_bump(const TermPolynomial& poly, int s1, int s2) const {
    const int lo = std::min(s1, s2), hi = std::max(s1, s2);
    TermPolynomial out;
    for (const auto& [t, c] : poly.terms()) {
      ATerm t2 = t;
      if (hi < L)
        t2.r[t2.ridx(lo, hi)] += 1;
      else if (lo < L)
        t2.q[lo] += 1;
      else
        t2.outer_gamma += 1;
      out.add(t2, c);
    }
    return out;
  }

  /// E[prod_k X_{slot k}^{e_k}] as a polynomial in the mean/cov symbols.
  const TermPolynomial& moment(const std::vector<int>& e) {
    auto it = memo.find(e);
    if (it != memo.end()) return it->second;

    int first = -1;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > 0) {
        first = static_cast<int>(i);
        break;
      }
    TermPolynomial result;
    if (first < 0) {
      ATerm one;
      one.n = L;
      one.p.assign(L, 0);
      one.q.assign(L, 0);
      one.alpha.assign(L, 0);
      one.r.assign(ATerm::rsize(L), 0);
      result.add(one, 1.0);
    } else {
      std::vector<int> rest = e;
      rest[first] -= 1;
      result.add_scaled(mean_bump(moment(rest), first), 1.0);
      for (std::size_t j = 0; j < e.size(); ++j) {
        if (rest[j] == 0) continue;
        std::vector<int> sub = rest;
        sub[j] -= 1;
        result.add_scaled(
            cov_bump(moment(sub), first, static_cast<int>(j)),
            static_cast<double>(rest[j]));
      }
    }
    if (result.size() > monomial_cap)
      throw NumericalError(
          "build_j_terms: symbolic moment exceeds term cap " +
          std::to_string(monomial_cap));
    auto [ins, ok] = memo.emplace(e, std::move(result));
    return ins->second;
  }
};

}  // namespace detail

/// Expands the iterated-integral expectations behind the epsilon series
/// into A-term polynomials. Each level's measure (dY - c X dt) splits
/// into the innovation measure dlam^{(1)} with integrand g(X), and the
/// ds measure with integrand -c (X - mu) g(X); the conditional Gaussian
/// law then turns every branch into mean/covariance monomials. The
/// polynomial for J^i carries the 1/sigma^{2i} prefactor.
inline JTerms build_j_terms(const PolySpec& g, int order,
                            const ScalarCoeffs& coeffs,
                            std::size_t term_cap = kDefaultTermCap) {
  if (order < 0) throw ContractError("build_j_terms: order must be >= 0");
  JTerms out;
  out.order = order;
  out.j_x.resize(order + 1);
  out.j_one.resize(order + 1);

  // i = 0: J^0(X_t) = mu_{t;t}, J^0(1) = 1.
  out.j_x[0].add(ATerm::monomial(1, 0), 1.0);
  out.j_one[0].add(ATerm::monomial(0, 0), 1.0);
  if (g.is_zero() || order == 0) return out;  // no perturbation

  const double c = coeffs.c;
  const double s2 = coeffs.sigma * coeffs.sigma;

  // Per-level integrand atom: coefficient, X-power, extra mu_{t_k} power.
  struct Atom {
    double coeff;
    int xpow;
    int mupow;
  };

  for (int i = 1; i <= order; ++i) {
    const int L = i;
    detail::SymWick wick(L, term_cap * 8);
    double prefactor = 1.0;
    for (int k = 0; k < i; ++k) prefactor /= s2;

    for (int mask = 0; mask < (1 << L); ++mask) {
      std::vector<int> alpha(L);
      std::vector<std::vector<Atom>> level_atoms(L);
      for (int k = 0; k < L; ++k) {
        alpha[k] = (mask >> k) & 1;
        for (int d = 0; d <= g.degree(); ++d) {
          if (g.coeff(d) == 0.0) continue;
          if (alpha[k] == 1) {
            level_atoms[k].push_back({g.coeff(d), d, 0});
          } else {
            level_atoms[k].push_back({-c * g.coeff(d), d + 1, 0});
            level_atoms[k].push_back({c * g.coeff(d), d, 1});
          }
        }
      }

      // Expand the product over levels, one atom choice per level.
      std::vector<std::size_t> pick(L, 0);
      while (true) {
        double coeff = prefactor;
        std::vector<int> e(L + 1, 0);
        std::vector<int> mu_extra(L, 0);
        for (int k = 0; k < L; ++k) {
          const Atom& at = level_atoms[k][pick[k]];
          coeff *= at.coeff;
          e[k] = at.xpow;
          mu_extra[k] = at.mupow;
        }

        for (int with_x : {1, 0}) {  // U = X_t and U = 1
          std::vector<int> ex = e;
          ex[L] = with_x;
          TermPolynomial& dst = with_x ? out.j_x[i] : out.j_one[i];
          const TermPolynomial& mom = wick.moment(ex);
          for (const auto& [t, mc] : mom.terms()) {
            ATerm t2 = t;
            t2.alpha = alpha;
            for (int k = 0; k < L; ++k) t2.p[k] += mu_extra[k];
            dst.add(t2, coeff * mc);
          }
          if (dst.size() > term_cap)
            throw NumericalError(
                "build_j_terms: term cap " + std::to_string(term_cap) +
                " exceeded while expanding J^" + std::to_string(i));
        }

        // next atom tuple
        int k = 0;
        for (; k < L; ++k) {
          if (++pick[k] < level_atoms[k].size()) break;
          pick[k] = 0;
        }
        if (k == L) break;
      }
    }
  }
  return out;
}

}  // namespace expfilt
