// Empirical offline losses: the squared Bellman loss L(f, f~, pi; D), the
// (approximate) Bellman error E(f, pi; D), and the policy expectation
// f(S, pi).  All three are templates over
//   F  : double operator()(const Matrix& s, const JointAction& a)
//   Pi : Matrix operator()(const Matrix& s)  -> N x kActionCount action probs
// so the network classes and the tabular test oracles share one
// implementation.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "setrl/dataset.hpp"
#include "setrl/matrix.hpp"
#include "setrl/networks.hpp"
#include "setrl/rng.hpp"

namespace setrl {

namespace detail {

// Enumerating all 5^N joint actions is cheaper and exact up to 5^N <= 125.
inline bool enumerable_actions(int n_agents) {
  return n_agents >= 1 && n_agents <= 3;
}

template <typename F, typename Pi>
double expected_f_exact(F&& f, const Matrix& s, Pi&& pi) {
  const int n = s.rows;
  const Matrix probs = pi(s);
  JointAction a(n, 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) w *= probs(i, a[i]);
    if (w > 0.0) total += w * f(s, a);
    int i = 0;
    for (; i < n; ++i) {
      if (++a[i] < kActionCount) break;
      a[i] = 0;
    }
    if (i == n) break;
  }
  return total;
}

template <typename F, typename Pi>
double expected_f_mc(F&& f, const Matrix& s, Pi&& pi, int k_samples, std::mt19937_64& g) {
  const int n = s.rows;
  const Matrix probs = pi(s);
  double total = 0.0;
  JointAction a(n);
  for (int k = 0; k < k_samples; ++k) {
    for (int i = 0; i < n; ++i) a[i] = sample_categorical(g, probs.row(i), kActionCount);
    total += f(s, a);
  }
  return total / k_samples;
}

}  // namespace detail

// f(S, pi) = E_{A ~ pi(.|S)}[f(S, A)], exact by enumeration when 5^N <= 125,
// otherwise a K-sample Monte-Carlo mean.  force_mc bypasses enumeration (used
// by tests comparing the two estimates).
template <typename F, typename Pi>
double expected_f(F&& f, const Matrix& s, Pi&& pi, int k_samples, std::mt19937_64& g,
                  bool force_mc = false) {
  if (k_samples < 1) throw std::invalid_argument("expected_f: k_samples must be >= 1");
  if (!force_mc && detail::enumerable_actions(s.rows))
    return detail::expected_f_exact(std::forward<F>(f), s, std::forward<Pi>(pi));
  return detail::expected_f_mc(std::forward<F>(f), s, std::forward<Pi>(pi), k_samples, g);
}

// Squared Bellman loss over a batch:
//   L(f, f~, pi) = (1/n) sum_i (f(S_i, A_i) - r_i - gamma f~(S'_i, pi))^2.
template <typename F, typename Ft, typename Pi>
double bellman_loss(F&& f, Ft&& ftilde, Pi&& pi, const std::vector<Transition>& batch,
                    double gamma, int k_samples, std::mt19937_64& g, bool force_mc = false) {
  if (batch.empty()) throw std::invalid_argument("bellman_loss: empty batch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("bellman_loss: gamma");
  double total = 0.0;
  for (const Transition& tr : batch) {
    const double target =
        tr.r + gamma * expected_f(std::forward<Ft>(ftilde), tr.s2, std::forward<Pi>(pi),
                                  k_samples, g, force_mc);
    const double delta = f(tr.s, tr.a) - target;
    total += delta * delta;
  }
  return total / static_cast<double>(batch.size());
}

// Regressor interface for the inner Bellman-error minimization:
//   double value(const Matrix& s, const JointAction& a) const;
//   void fit_step(const std::vector<Transition>& batch,
//                 const std::vector<double>& targets);   // one GD step on MSE
// Reg must be copyable (the inner search works on a copy of f).
struct BellmanErrorConfig {
  int inner_steps = 50;
  int k_samples = 4;
  bool force_mc = false;  // sample policy expectations even when enumerable
};

// E(f, pi; D) = L(f, f, pi; D) - min over inner-search candidates of
// L(f~, f, pi; D).  The inner search is warm-started at f~ = f and descends
// the fixed-target MSE; the reported value upper-bounds the true Bellman
// error and is monotone nonincreasing in inner_steps for a fixed seed.
template <typename Reg, typename Pi>
double bellman_error(const Reg& f, Pi&& pi, const std::vector<Transition>& data,
                     double gamma, const BellmanErrorConfig& cfg, std::mt19937_64& g) {
  if (data.empty()) throw std::invalid_argument("bellman_error: empty dataset");
  // Fixed bootstrap targets y_i = r_i + gamma f(S'_i, pi).
  std::vector<double> targets(data.size());
  auto feval = [&](const Matrix& s, const JointAction& a) { return f.value(s, a); };
  for (size_t i = 0; i < data.size(); ++i)
    targets[i] = data[i].r +
                 gamma * expected_f(feval, data[i].s2, pi, cfg.k_samples, g, cfg.force_mc);
  auto mse = [&](const Reg& reg) {
    double total = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
      const double delta = reg.value(data[i].s, data[i].a) - targets[i];
      total += delta * delta;
    }
    return total / static_cast<double>(data.size());
  };
  const double outer = mse(f);  // L(f, f, pi; D)
  Reg inner = f;                // warm start: f itself is candidate zero
  double best = outer;
  for (int it = 0; it < cfg.inner_steps; ++it) {
    inner.fit_step(data, targets);
    best = std::min(best, mse(inner));
  }
  return outer - best;
}

}  // namespace setrl
