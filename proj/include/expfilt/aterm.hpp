#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "expfilt/error.hpp"

namespace expfilt {

/// One iterated-integral functional of the smoothed means and
/// covariances, the state-variable alphabet of the expansion:
///
///   mu_{t;t}^outer_mu gamma(t)^outer_gamma *
///   int_{0<=t_1<=...<=t_n<=t} prod_i mu_{t_i;t}^{p_i}
///     prod_i gamma(t_i,t;t)^{q_i} prod_{i<=j} gamma(t_i,t_j;t)^{r_ij}
///     dlam^{(alpha_1)}_{t_1} ... dlam^{(alpha_n)}_{t_n},
///
/// where dlam^{(0)} = ds and dlam^{(1)} = dY_s - c mu_{s;t} ds. The
/// outer monomial carries boundary factors produced by differentiation
/// in t. Depth n = 0 means the bare monomial mu^m gamma^k.
struct ATerm {
  int n = 0;
  std::vector<int> p, q, alpha;  // size n
  std::vector<int> r;            // packed upper triangle, size n(n+1)/2
  int outer_mu = 0;
  int outer_gamma = 0;

  static ATerm monomial(int mu_pow, int gamma_pow) {
    ATerm t;
    t.outer_mu = mu_pow;
    t.outer_gamma = gamma_pow;
    return t;
  }

  static ATerm depth1(int p1, int q1, int r11, int a1) {
    ATerm t;
    t.n = 1;
    t.p = {p1};
    t.q = {q1};
    t.r = {r11};
    t.alpha = {a1};
    return t;
  }

  static std::size_t rsize(int n) {
    return static_cast<std::size_t>(n) * (n + 1) / 2;
  }

  // index into r for i <= j (0-based levels)
  std::size_t ridx(int i, int j) const {
    return static_cast<std::size_t>(i) * (2 * n - i + 1) / 2 +
           static_cast<std::size_t>(j - i);
  }
  int r_at(int i, int j) const { return r[ridx(i, j)]; }

  bool is_monomial() const { return n == 0; }
  bool has_outer() const { return outer_mu != 0 || outer_gamma != 0; }

  /// The term with the outer monomial stripped off.
  ATerm integral_part() const {
    ATerm t = *this;
    t.outer_mu = 0;
    t.outer_gamma = 0;
    return t;
  }

  int degree() const {
    int d = outer_mu + outer_gamma;
    for (int v : p) d += v;
    for (int v : q) d += v;
    for (int v : r) d += 2 * v;
    for (int v : alpha) d += v;
    return d;
  }

  auto key() const {
    return std::tie(n, outer_mu, outer_gamma, p, q, alpha, r);
  }
  bool operator<(const ATerm& o) const { return key() < o.key(); }
  bool operator==(const ATerm& o) const { return key() == o.key(); }

  std::string to_string() const {
    std::ostringstream os;
    bool lead = true;
    auto emit_pow = [&](const char* sym, int pow) {
      if (pow == 0) return;
      if (!lead) os << " ";
      os << sym;
      if (pow != 1) os << "^" << pow;
      lead = false;
    };
    emit_pow("mu", outer_mu);
    emit_pow("gamma", outer_gamma);
    if (n > 0) {
      if (!lead) os << " ";
      auto vec = [&](const std::vector<int>& v) {
        for (std::size_t i = 0; i < v.size(); ++i)
          os << (i ? "," : "") << v[i];
      };
      os << "A[p=";
      vec(p);
      os << "|q=";
      vec(q);
      os << "|r=";
      vec(r);
      os << "|a=";
      vec(alpha);
      os << "]";
      lead = false;
    }
    if (lead) os << "1";
    return os.str();
  }
};

/// Sparse linear combination of A-terms; zero coefficients are never
/// stored and keys are canonical.
class TermPolynomial {
 public:
  using Map = std::map<ATerm, double>;

  TermPolynomial() = default;
  explicit TermPolynomial(Map terms) : terms_(std::move(terms)) { prune(); }

  void add(const ATerm& t, double coeff) {
    if (coeff == 0.0) return;
    auto [it, inserted] = terms_.emplace(t, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  void add_scaled(const TermPolynomial& other, double scale) {
    for (const auto& [t, c] : other.terms_) add(t, c * scale);
  }

  const Map& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [t, c] : terms_) {
      os << (first ? "" : " ") << (c < 0 ? "- " : (first ? "" : "+ "));
      os.precision(15);
      os << std::abs(c) << " " << t.to_string();
      first = false;
    }
    return os.str();
  }

 private:
  void prune() {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = it->second == 0.0 ? terms_.erase(it) : std::next(it);
  }

  Map terms_;
};

}  // namespace expfilt
