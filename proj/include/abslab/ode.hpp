#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace abslab {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
constexpr Vec<N> axpy(const Vec<N>& x, double a, const Vec<N>& y) {
  Vec<N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + a * y[i];
  return out;
}

// Classical fourth-order Runge-Kutta step for an autonomous field f(x).
template <std::size_t N, class F>
Vec<N> rk4_step(const Vec<N>& x, double dt, F&& f) {
  const Vec<N> k1 = f(x);
  const Vec<N> k2 = f(axpy(x, 0.5 * dt, k1));
  const Vec<N> k3 = f(axpy(x, 0.5 * dt, k2));
  const Vec<N> k4 = f(axpy(x, dt, k3));
  Vec<N> out{};
  for (std::size_t i = 0; i < N; ++i)
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <std::size_t N>
bool all_finite(const Vec<N>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

// Bisection on a bracketing interval [a, b] with f(a)*f(b) <= 0.
template <class F>
double bisect(F&& f, double a, double b, double tol = 1e-10, int max_iter = 200) {
  double fa = f(a);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace abslab
