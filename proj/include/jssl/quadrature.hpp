#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace jssl {

namespace detail {

template <std::size_t K>
using Vec = std::array<double, K>;

template <std::size_t K>
Vec<K> simpson(const Vec<K>& fa, const Vec<K>& fm, const Vec<K>& fb, double width) {
  Vec<K> out;
  for (std::size_t k = 0; k < K; ++k) out[k] = width / 6.0 * (fa[k] + 4.0 * fm[k] + fb[k]);
  return out;
}

template <std::size_t K, typename F>
Vec<K> simpson_recurse(const F& f, double a, double b, const Vec<K>& fa, const Vec<K>& fm, const Vec<K>& fb,
                       const Vec<K>& whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const Vec<K> flm = f(lm);
  const Vec<K> frm = f(rm);
  const Vec<K> left = simpson(fa, flm, fm, m - a);
  const Vec<K> right = simpson(fm, frm, fb, b - m);
  double error = 0.0;
  for (std::size_t k = 0; k < K; ++k) error = std::max(error, std::abs(left[k] + right[k] - whole[k]));
  Vec<K> out;
  if (depth <= 0 || error <= 15.0 * tol) {
    for (std::size_t k = 0; k < K; ++k) out[k] = left[k] + right[k] + (left[k] + right[k] - whole[k]) / 15.0;
    return out;
  }
  const Vec<K> l = simpson_recurse<K>(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
  const Vec<K> r = simpson_recurse<K>(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  for (std::size_t k = 0; k < K; ++k) out[k] = l[k] + r[k];
  return out;
}

}  // namespace detail

// Adaptive Simpson quadrature of a vector-valued integrand f: double -> array<double, K>,
// with absolute tolerance `tol` on every component (Richardson-corrected).
template <std::size_t K, typename F>
std::array<double, K> adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 40) {
  if (!(b > a)) return {};
  const auto fa = f(a);
  const auto fb = f(b);
  const auto fm = f(0.5 * (a + b));
  const auto whole = detail::simpson<K>(fa, fm, fb, b - a);
  return detail::simpson_recurse<K>(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 40) {
  const auto wrapped = [&](double t) { return std::array<double, 1>{f(t)}; };
  return adaptive_simpson<1>(wrapped, a, b, tol, max_depth)[0];
}

}  // namespace jssl
