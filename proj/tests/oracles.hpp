#pragma once

// Test-only reference computations. Nothing here shares code with the
// library paths they check.

#include "evnet/station_chain.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

/// M/M/c/c loss probability from the closed form a^c/c! / sum_k a^k/k!.
inline double erlang_b_closed_form(int servers, double a) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= servers; ++k) {
    term *= a / k;
    sum += term;
  }
  return term / sum;
}

/// Stationary vector from a dense LU solve of Q^T pi = 0 with the last
/// balance equation replaced by the normalization.
inline std::vector<double> stationary_lu(const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd a = q.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
  return {pi.data(), pi.data() + n};
}

/// Blocking probability using the LU oracle and a hand-written generator that
/// follows the transition rules independently of build_generator.
inline double blocking_lu(double lambda, double mu, int S, int R, double nu) {
  std::vector<std::pair<int, int>> states;
  for (int n = 0; n <= S + R; ++n) {
    const int emax = n <= S ? R : R - (n - S);
    for (int e = 0; e <= emax; ++e) states.emplace_back(n, e);
  }
  auto find = [&](int n, int e) {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i].first == n && states[i].second == e) return static_cast<Eigen::Index>(i);
    return Eigen::Index{-1};
  };
  const auto k = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto [n, e] = states[static_cast<std::size_t>(i)];
    if (n < S) q(i, find(n + 1, e)) += lambda;
    if (n >= S && e > 0) q(i, find(n + 1, e - 1)) += lambda;
    if (n > 0) q(i, find(n - 1, e)) += n * mu;
    if (n < S && e < R) q(i, find(n, e + 1)) += nu;
    q(i, i) = -q.row(i).sum();
  }
  const auto pi = stationary_lu(q);
  double b = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].first >= S && states[i].second == 0) b += pi[i];
  return b;
}

}  // namespace oracle
