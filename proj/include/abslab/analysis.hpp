#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "abslab/friction.hpp"
#include "abslab/ode.hpp"
#include "abslab/plant.hpp"

namespace abslab {

// Torque that balances the slip equation at lambda.
inline double psi(double lambda, const VehicleParams& p, const RoadSurface& s) {
  return (p.r + p.J * (1.0 - lambda) / (p.r * p.m)) * p.Fz() * mu(s, lambda);
}

inline double psi_prime(double lambda, const VehicleParams& p, const RoadSurface& s) {
  const double a = p.r + p.J * (1.0 - lambda) / (p.r * p.m);
  return p.Fz() * (a * mu_prime(s, lambda) - p.J / (p.r * p.m) * mu(s, lambda));
}

struct PsiPeak {
  double lambda;
  double value;
};

inline PsiPeak psi_peak(const VehicleParams& p, const RoadSurface& s) {
  constexpr int n = 1000;
  int best = 0;
  double best_v = psi(0.0, p, s);
  for (int i = 1; i <= n; ++i) {
    const double v = psi(i / double(n), p, s);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  if (best == 0 || best == n) return {best / double(n), best_v};
  const double l = bisect([&](double x) { return psi_prime(x, p, s); }, (best - 1) / double(n),
                          (best + 1) / double(n), 1e-14);
  return {l, psi(l, p, s)};
}

enum class Stability { Stable, Unstable };

inline const char* to_string(Stability s) { return s == Stability::Stable ? "stable" : "unstable"; }

struct Equilibrium {
  double lambda_eq;
  Stability stability;
  double torque;
};

struct EquilibriumSet {
  std::vector<Equilibrium> points;
  bool locks = false;  // no equilibrium: the wheel locks
};

// Right-hand side of the slip equation written around Psi; v only scales it, so v = 1.
inline double psi_field(double lambda, double Tb, const VehicleParams& p, const RoadSurface& s) {
  const double v = 1.0;
  const double w = v * (1.0 - lambda) / p.r;
  return (lambda - 1.0) / (p.J * w) * (psi(lambda, p, s) - Tb);
}

inline EquilibriumSet find_equilibria(double Tb, const VehicleParams& p, const RoadSurface& s) {
  if (!(Tb >= 0.0)) throw DomainError("torque must be non-negative");
  constexpr int n = 1000;
  const auto f = [&](double l) { return psi(l, p, s) - Tb; };
  std::vector<double> roots;
  double prev_l = 0.0, prev_f = f(0.0);
  if (prev_f == 0.0) roots.push_back(0.0);
  for (int i = 1; i <= n; ++i) {
    const double l = i / double(n);
    const double fl = f(l);
    if (fl == 0.0) {
      if (l < 1.0) roots.push_back(l);
    } else if (prev_f != 0.0 && (prev_f < 0.0) != (fl < 0.0)) {
      const double root = bisect(f, prev_l, l, 1e-10);
      if (root < 1.0) roots.push_back(root);
    }
    prev_l = l;
    prev_f = fl;
  }
  EquilibriumSet out;
  constexpr double h = 1e-6;
  for (double r : roots) {
    const double lo = std::max(r - h, 0.0);
    const double hi = std::min(r + h, 1.0 - 1e-12);
    const double d = (psi_field(hi, Tb, p, s) - psi_field(lo, Tb, p, s)) / (hi - lo);
    out.points.push_back({r, d < 0.0 ? Stability::Stable : Stability::Unstable, Tb});
  }
  out.locks = out.points.empty();
  return out;
}

// G(s) = gain_num (s - zero)/(s - pole), or gain_num/(s - pole) without a zero.
struct FirstOrderTf {
  double gain_num;
  std::optional<double> zero;
  double pole;

  std::complex<double> operator()(std::complex<double> s) const {
    const std::complex<double> num = zero ? gain_num * (s - *zero) : std::complex<double>(gain_num);
    return num / (s - pole);
  }
  double dc_gain() const { return zero ? gain_num * *zero / pole : -gain_num / pole; }
};

inline FirstOrderTf linearize_slip(double lambda_bar, double v, const VehicleParams& p, const RoadSurface& s) {
  if (v <= kVEps) throw DomainError("vehicle stopped");
  if (!(lambda_bar >= 0.0 && lambda_bar < 1.0)) throw DomainError("operating slip outside [0, 1)");
  const double bracket =
      mu_prime(s, lambda_bar) * (1.0 - lambda_bar + p.m * p.r * p.r / p.J) - mu(s, lambda_bar);
  return {p.r / (p.J * v), std::nullopt, -(p.Fz() / (p.m * v)) * bracket};
}

// Wheel-deceleration output eta = -r dw/dt / g.
inline FirstOrderTf linearize_decel(double lambda_bar, double v, const VehicleParams& p, const RoadSurface& s) {
  const FirstOrderTf gl = linearize_slip(lambda_bar, v, p, s);
  const double zero =
      -(p.Fz() / (p.m * v)) * (mu_prime(s, lambda_bar) * (1.0 - lambda_bar) - mu(s, lambda_bar));
  return {p.r / (p.J * p.g), zero, gl.pole};
}

// Proportional slip feedback Tb = K (lambda_ref - lambda) is stable iff K exceeds this.
inline double stability_gain_bound(double lambda_bar, const VehicleParams& p, const RoadSurface& s) {
  if (!(lambda_bar >= 0.0 && lambda_bar < 1.0)) throw DomainError("operating slip outside [0, 1)");
  const double k = p.Fz() * p.J / (p.m * p.r);
  return -mu_prime(s, lambda_bar) * k * (1.0 - lambda_bar + p.m * p.r * p.r / p.J) + mu(s, lambda_bar) * k;
}

inline double closed_loop_pole(double lambda_bar, double v, double K, const VehicleParams& p,
                               const RoadSurface& s) {
  return -(1.0 / v) * (mu_prime(s, lambda_bar) * p.Fz() / p.m * (1.0 - lambda_bar + p.m * p.r * p.r / p.J) +
                       K * p.r / p.J) +
         mu(s, lambda_bar) * p.Fz() / (p.m * v);
}

}  // namespace abslab
