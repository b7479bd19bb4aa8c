// Tabular micro-MDPs: exact policy evaluation, discounted occupancy via the
// geometric-series formula, Monte-Carlo occupancy estimation, and the
// density-ratio concentrability coefficient.  These are the independent
// oracles the offline-training tests check against.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "setrl/matrix.hpp"
#include "setrl/rng.hpp"

namespace setrl {

// Finite MDP with S states, A actions, row-stochastic transitions, bounded
// rewards, a start distribution, and discount gamma.
struct TabularMdp {
  int S = 0;
  int A = 0;
  std::vector<double> P;    // ((s * A) + a) * S + s2
  std::vector<double> r;    // s * A + a
  std::vector<double> mu0;  // S
  double gamma = 0.95;

  double& p(int s, int a, int s2) { return P[(static_cast<size_t>(s) * A + a) * S + s2]; }
  double pr(int s, int a, int s2) const {
    return P[(static_cast<size_t>(s) * A + a) * S + s2];
  }
  double& rew(int s, int a) { return r[static_cast<size_t>(s) * A + a]; }
  double rew(int s, int a) const { return r[static_cast<size_t>(s) * A + a]; }

  void validate() const {
    if (S < 1 || A < 1) throw std::invalid_argument("TabularMdp: S, A must be positive");
    if (P.size() != static_cast<size_t>(S) * A * S || r.size() != static_cast<size_t>(S) * A ||
        mu0.size() != static_cast<size_t>(S))
      throw std::invalid_argument("TabularMdp: inconsistent table sizes");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("TabularMdp: gamma in [0,1)");
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < S; ++s2) sum += pr(s, a, s2);
        if (std::abs(sum - 1.0) > 1e-9)
          throw std::invalid_argument("TabularMdp: transition rows must sum to 1");
      }
    double sum = 0.0;
    for (double v : mu0) sum += v;
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("TabularMdp: mu0 must sum to 1");
  }
};

// Stochastic policy table: pi[s * A + a] = Pr(a | s).
using TabularPolicy = std::vector<double>;

inline void validate_policy(const TabularMdp& mdp, const TabularPolicy& pi) {
  if (pi.size() != static_cast<size_t>(mdp.S) * mdp.A)
    throw std::invalid_argument("TabularPolicy: wrong size");
  for (int s = 0; s < mdp.S; ++s) {
    double sum = 0.0;
    for (int a = 0; a < mdp.A; ++a) sum += pi[static_cast<size_t>(s) * mdp.A + a];
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("TabularPolicy: rows must sum to 1");
  }
}

namespace detail {

// Dense Gaussian elimination with partial pivoting; sizes here are tiny.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
    if (std::abs(a[piv][col]) < 1e-14)
      throw std::runtime_error("solve_linear: singular system");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row][col] / a[col][col];
      for (int k = col; k < n; ++k) a[row][k] -= f * a[col][k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int row = n - 1; row >= 0; --row) {
    double s = b[row];
    for (int k = row + 1; k < n; ++k) s -= a[row][k] * x[k];
    x[row] = s / a[row][row];
  }
  return x;
}

}  // namespace detail

// Exact state values: V = (I - gamma P_pi)^{-1} r_pi.
inline std::vector<double> exact_v(const TabularMdp& mdp, const TabularPolicy& pi) {
  mdp.validate();
  validate_policy(mdp, pi);
  const int S = mdp.S, A = mdp.A;
  std::vector<std::vector<double>> mat(S, std::vector<double>(S, 0.0));
  std::vector<double> rhs(S, 0.0);
  for (int s = 0; s < S; ++s) {
    mat[s][s] = 1.0;
    for (int a = 0; a < A; ++a) {
      const double pa = pi[static_cast<size_t>(s) * A + a];
      rhs[s] += pa * mdp.rew(s, a);
      for (int s2 = 0; s2 < S; ++s2) mat[s][s2] -= mdp.gamma * pa * mdp.pr(s, a, s2);
    }
  }
  return detail::solve_linear(mat, rhs);
}

// Exact action values: Q(s,a) = r(s,a) + gamma sum_s' P(s,a,s') V(s').
inline std::vector<double> exact_q(const TabularMdp& mdp, const TabularPolicy& pi) {
  const std::vector<double> v = exact_v(mdp, pi);
  std::vector<double> q(static_cast<size_t>(mdp.S) * mdp.A, 0.0);
  for (int s = 0; s < mdp.S; ++s)
    for (int a = 0; a < mdp.A; ++a) {
      double x = mdp.rew(s, a);
      for (int s2 = 0; s2 < mdp.S; ++s2) x += mdp.gamma * mdp.pr(s, a, s2) * v[s2];
      q[static_cast<size_t>(s) * mdp.A + a] = x;
    }
  return q;
}

// Discounted state-action occupancy via the geometric-series formula:
// rho solves (I - gamma P_pi^T) rho = (1 - gamma) mu0, d(s,a) = rho(s) pi(a|s).
inline std::vector<double> occupancy(const TabularMdp& mdp, const TabularPolicy& pi) {
  mdp.validate();
  validate_policy(mdp, pi);
  const int S = mdp.S, A = mdp.A;
  std::vector<std::vector<double>> mat(S, std::vector<double>(S, 0.0));
  std::vector<double> rhs(S, 0.0);
  for (int s2 = 0; s2 < S; ++s2) {
    mat[s2][s2] = 1.0;
    rhs[s2] = (1.0 - mdp.gamma) * mdp.mu0[s2];
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        mat[s2][s] -= mdp.gamma * pi[static_cast<size_t>(s) * A + a] * mdp.pr(s, a, s2);
  }
  const std::vector<double> rho = detail::solve_linear(mat, rhs);
  std::vector<double> d(static_cast<size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      d[static_cast<size_t>(s) * A + a] = rho[s] * pi[static_cast<size_t>(s) * A + a];
  return d;
}

// Monte-Carlo occupancy: a single chain with per-step restart probability
// (1 - gamma) visits state-action pairs with frequency equal to the
// discounted occupancy.
inline std::vector<double> mc_occupancy(const TabularMdp& mdp, const TabularPolicy& pi,
                                        long steps, std::mt19937_64& g) {
  mdp.validate();
  validate_policy(mdp, pi);
  std::vector<double> counts(static_cast<size_t>(mdp.S) * mdp.A, 0.0);
  auto draw = [&](const double* probs, int n) { return sample_categorical(g, probs, n); };
  int s = draw(mdp.mu0.data(), mdp.S);
  for (long t = 0; t < steps; ++t) {
    const int a = draw(&pi[static_cast<size_t>(s) * mdp.A], mdp.A);
    counts[static_cast<size_t>(s) * mdp.A + a] += 1.0;
    if (uniform(g, 0.0, 1.0) < 1.0 - mdp.gamma) {
      s = draw(mdp.mu0.data(), mdp.S);
    } else {
      s = draw(&mdp.P[(static_cast<size_t>(s) * mdp.A + a) * mdp.S], mdp.S);
    }
  }
  for (double& v : counts) v /= static_cast<double>(steps);
  return counts;
}

// Density-ratio concentrability: max_{(s,a)} d^{pi*}(s,a) / nu(s,a), taken
// over pairs where the occupancy is positive.  Returns +infinity when nu
// assigns zero mass to a visited pair (the infinite-coverage signal).
inline double concentrability_tabular(const TabularMdp& mdp, const TabularPolicy& pi_star,
                                      const std::vector<double>& nu) {
  const std::vector<double> d = occupancy(mdp, pi_star);
  if (nu.size() != d.size())
    throw std::invalid_argument("concentrability_tabular: nu has wrong size");
  double worst = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    if (d[i] <= 1e-15) continue;
    if (nu[i] <= 0.0) return kInf;
    worst = std::max(worst, d[i] / nu[i]);
  }
  return worst;
}

}  // namespace setrl
