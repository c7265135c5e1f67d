#pragma once

// Brute-force reference computations, written independently of the library internals.

#include <cmath>
#include <cstddef>
#include <vector>

#include "jssl/state.hpp"

namespace jssl::oracle {

// Breslow-tie log partial likelihood for a single covariate by direct double sums:
//   sum over events i of [beta x_i - log sum_{j : t_j >= t_i} exp(beta x_j)].
inline double cox_loglik_1d(const std::vector<double>& time, const std::vector<int>& event,
                            const std::vector<double>& x, double beta) {
  std::vector<double> w(time.size());
  for (std::size_t j = 0; j < time.size(); ++j) w[j] = std::exp(beta * x[j]);
  double ll = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (!event[i]) continue;
    double risk = 0.0;
    for (std::size_t j = 0; j < time.size(); ++j) {
      if (time[j] >= time[i]) risk += w[j];
    }
    ll += beta * x[i] - std::log(risk);
  }
  return ll;
}

// Maximizer of cox_loglik_1d over the grid lo, lo + step, ..., hi.
inline double grid_search_beta(const std::vector<double>& time, const std::vector<int>& event,
                               const std::vector<double>& x, double lo = -10.0, double hi = 10.0,
                               double step = 1e-4) {
  double best = lo;
  double best_ll = -INFINITY;
  const auto steps = static_cast<long>(std::llround((hi - lo) / step));
  for (long k = 0; k <= steps; ++k) {
    const double b = lo + static_cast<double>(k) * step;
    const double ll = cox_loglik_1d(time, event, x, b);
    if (ll > best_ll) {
      best_ll = ll;
      best = b;
    }
  }
  return best;
}

// Midpoint Riemann sum of sum_l (F(t, l) - 1{eta(t) = l})^2 over [0, tau].
inline double riemann_brier(const StateCurve& curve, double time, int status, double tau, std::size_t points) {
  const double h = tau / static_cast<double>(points);
  double total = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * h;
    const auto f = curve.at(t);
    const State s = eta(time, status, t);
    for (State l : kStates) {
      const double indicator = l == s ? 1.0 : 0.0;
      const double e = f[state_index(l)] - indicator;
      total += e * e;
    }
  }
  return total * h;
}

}  // namespace jssl::oracle
