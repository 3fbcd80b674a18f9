#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "expfilt/error.hpp"

namespace expfilt {

inline constexpr int kWickDegreeCap = 12;

/// Gaussian moment E[prod_i X_i^{k_i}] for X ~ N(means, cov), by the
/// Isserlis/Wick recursion extended with means:
///   E[X_1 M] = m_1 E[M] + sum_j cov(1,j) a_j E[M / X_j],
/// memoized over exponent vectors.
inline double wick_moment(const Eigen::VectorXd& means,
                          const Eigen::MatrixXd& cov,
                          const std::vector<int>& exponents,
                          int degree_cap = kWickDegreeCap) {
  const int d = static_cast<int>(exponents.size());
  if (means.size() != d || cov.rows() != d || cov.cols() != d)
    throw ContractError("wick_moment: dimension mismatch");
  const int total = std::accumulate(exponents.begin(), exponents.end(), 0);
  if (total > degree_cap)
    throw NumericalError("wick_moment: total degree " + std::to_string(total) +
                         " exceeds cap " + std::to_string(degree_cap));
  for (int k : exponents)
    if (k < 0) throw ContractError("wick_moment: negative exponent");

  std::map<std::vector<int>, double> memo;
  std::function<double(std::vector<int>&)> rec =
      [&](std::vector<int>& e) -> double {
    int first = -1;
    for (int i = 0; i < d; ++i)
      if (e[i] > 0) {
        first = i;
        break;
      }
    if (first < 0) return 1.0;
    auto it = memo.find(e);
    if (it != memo.end()) return it->second;

    std::vector<int> rest = e;
    rest[first] -= 1;
    double acc = means(first) * rec(rest);
    for (int j = 0; j < d; ++j) {
      if (rest[j] == 0 || cov(first, j) == 0.0) continue;
      std::vector<int> sub = rest;
      sub[j] -= 1;
      acc += cov(first, j) * static_cast<double>(rest[j]) * rec(sub);
    }
    memo.emplace(e, acc);
    return acc;
  };
  std::vector<int> e = exponents;
  return rec(e);
}

}  // namespace expfilt
