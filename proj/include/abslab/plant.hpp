#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "abslab/errors.hpp"
#include "abslab/friction.hpp"
#include "abslab/ode.hpp"

namespace abslab {

inline constexpr double kVEps = 0.5;   // m/s, stop threshold
inline constexpr double kWEps = 1e-3;  // rad/s, near-lock threshold

struct VehicleParams {
  double m = 400.0;
  double J = 1.0;
  double r = 0.3;
  double g = 9.81;
  std::optional<double> Fz_override;

  double Fz() const { return Fz_override ? *Fz_override : m * g; }

  void validate() const {
    if (!(m > 0 && J > 0 && r > 0 && g > 0 && Fz() > 0) || !std::isfinite(Fz()))
      throw ConfigError("vehicle parameters must be strictly positive");
  }
};

struct ActuatorParams {
  double w_act = 70.0;  // +inf gives an ideal (pass-through) lag
  double delay = 0.01;
  double Tb_min = 0.0;
  double Tb_max = 1500.0;

  void validate() const {
    if (!(w_act > 0) || !(delay >= 0) || !(Tb_min >= 0) || !(Tb_min < Tb_max) || !std::isfinite(Tb_max))
      throw ConfigError("actuator: require w_act > 0, delay >= 0, 0 <= Tb_min < Tb_max");
  }

  double clamp(double T) const { return std::clamp(T, Tb_min, Tb_max); }

  // FIFO length; rejects delays that are not an integer number of steps.
  std::size_t delay_steps(double dt) const {
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    const double ratio = delay / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
      throw ConfigError("actuator delay must be an integer multiple of dt");
    return static_cast<std::size_t>(n);
  }
};

struct PlantState {
  double v = 0.0;
  double w = 0.0;
  double x = 0.0;  // travelled distance
  double Tb_applied = 0.0;
  double actuator_state = 0.0;
  std::deque<double> delay_line;
};

inline double slip_of(double v, double w, double r) {
  if (!(v > 0.0)) return 0.0;
  return std::clamp((v - r * w) / v, 0.0, 1.0);
}

// Empty when the vehicle is stopped (v <= kVEps).
inline std::optional<double> slip(const PlantState& s, const VehicleParams& p) {
  if (s.v <= kVEps) return std::nullopt;
  return slip_of(s.v, s.w, p.r);
}

// Initial state at speed v and slip lambda with the actuator settled at torque T.
inline PlantState make_state(double v, double lambda, double T, const VehicleParams& p,
                             const ActuatorParams& act, double dt) {
  PlantState s;
  s.v = v;
  s.w = v * (1.0 - lambda) / p.r;
  s.Tb_applied = act.clamp(T);
  s.actuator_state = s.Tb_applied;
  s.delay_line.assign(act.delay_steps(dt), s.Tb_applied);
  return s;
}

struct Derivatives {
  double dv;
  double dw;
};

inline Derivatives derivatives_vw(double v, double w, double Tb, const VehicleParams& p,
                                  const RoadSurface& surf, bool frozen_v = false) {
  const double Fx = p.Fz() * mu(surf, slip_of(v, w, p.r));
  double dw = (p.r * Fx - Tb) / p.J;
  double dv = -Fx / p.m;
  if (frozen_v) {
    // v held; the wheel equation absorbs the v-coupling so slip obeys the same ODE
    dw += (v > 0.0 ? w / v : 0.0) * Fx / p.m;
    dv = 0.0;
  }
  if (w <= 0.0 && dw < 0.0) dw = 0.0;
  return {dv, dw};
}

inline Derivatives derivatives(const PlantState& s, double Tb, const VehicleParams& p,
                               const RoadSurface& surf) {
  return derivatives_vw(s.v, s.w, Tb, p, surf, false);
}

// Slip rate of the autonomous single-corner model.
inline double slip_derivative(double lambda, double v, double Tb, const VehicleParams& p,
                              const RoadSurface& surf) {
  if (v <= kVEps) throw DomainError("vehicle stopped");
  return -(1.0 / v) * ((1.0 - lambda) / p.m + p.r * p.r / p.J) * p.Fz() * mu(surf, lambda) +
         p.r / (v * p.J) * Tb;
}

inline double actuator_step(double cmd, PlantState& s, const ActuatorParams& act, double dt) {
  const double u_in = act.clamp(cmd);
  double u = u_in;
  if (!s.delay_line.empty()) {
    s.delay_line.push_back(u_in);
    u = s.delay_line.front();
    s.delay_line.pop_front();
  }
  const double a = -std::expm1(-act.w_act * dt);
  s.actuator_state += a * (u - s.actuator_state);
  s.actuator_state = act.clamp(s.actuator_state);
  s.Tb_applied = s.actuator_state;
  return s.Tb_applied;
}

inline std::string describe(const PlantState& s) {
  std::ostringstream os;
  os.precision(17);
  os << "v=" << s.v << " w=" << s.w << " x=" << s.x << " Tb=" << s.Tb_applied
     << " act=" << s.actuator_state << " fifo=" << s.delay_line.size();
  return os.str();
}

// One fixed step: actuator update, then RK4 on (v, w, x) holding the new applied torque.
inline void integrate_step(PlantState& s, double cmd, const VehicleParams& p, const ActuatorParams& act,
                           const RoadSurface& surf, double dt, bool frozen_v = false) {
  if (!all_finite(Vec<3>{s.v, s.w, s.Tb_applied}) || !std::isfinite(cmd))
    throw NumericalFault("non-finite plant input: " + describe(s));
  const PlantState before = s;
  const double Tb = actuator_step(cmd, s, act, dt);
  const auto f = [&](const Vec<3>& y) -> Vec<3> {
    const Derivatives d = derivatives_vw(y[0], std::max(y[1], 0.0), Tb, p, surf, frozen_v);
    return {d.dv, d.dw, y[0]};
  };
  Vec<3> y = rk4_step<3>({s.v, s.w, s.x}, dt, f);
  if (!all_finite(y)) throw NumericalFault("non-finite plant state after step; before: " + describe(before));
  s.v = std::max(y[0], 0.0);
  s.w = std::max(y[1], 0.0);
  s.x = y[2];
}

}  // namespace abslab
