#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "abslab/analysis.hpp"
#include "abslab/errors.hpp"
#include "abslab/plant.hpp"

namespace abslab {

struct TorqueBounds {
  double min = 0.0;
  double max = 1500.0;
  double clamp(double T) const { return std::clamp(T, min, max); }
};

// Uniform slip-tracking controller.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual double step(double measured_lambda, double reference_lambda, double measured_w, double dt) = 0;
  virtual void reset() = 0;
};

// ---------------------------------------------------------------- PID

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

struct PidState {
  PidGains gains;
  double integral = 0.0;  // integral of (schedule * error)
  double prev_error = 0.0;
  double deriv_filter_state = 0.0;
  bool primed = false;
};

struct PidOptions {
  TorqueBounds bounds;
  bool anti_windup = true;
};

// schedule multiplies the proportional/derivative terms and the integrator input.
inline double pid_step(PidState& st, double error, double dt, const PidOptions& opt, double schedule = 1.0) {
  if (!(dt > 0)) throw DomainError("dt must be positive");
  const PidGains& g = st.gains;
  const double raw = st.primed ? (error - st.prev_error) / dt : 0.0;
  const double tf = g.kp > 0.0 ? 0.1 * g.kd / g.kp : 0.0;
  st.deriv_filter_state += dt / (tf + dt) * (raw - st.deriv_filter_state);
  st.prev_error = error;
  st.primed = true;

  const double pd = schedule * (g.kp * error + g.kd * st.deriv_filter_state);
  const double next_integral = st.integral + schedule * error * dt;
  const double u = pd + g.ki * next_integral;
  const bool high = u > opt.bounds.max && error > 0.0;
  const bool low = u < opt.bounds.min && error < 0.0;
  if (!opt.anti_windup || !(high || low)) st.integral = next_integral;
  return opt.bounds.clamp(pd + g.ki * st.integral);
}

// Speed scheduling: gains scale with v_est / v_tune, v_est = r w / (1 - lambda).
struct SpeedSchedule {
  bool enabled = false;
  double v_tune = 20.0;
  double r = 0.3;

  double factor(double lambda, double w) const {
    if (!enabled) return 1.0;
    const double v_est = r * std::max(w, 0.0) / (1.0 - std::clamp(lambda, 0.0, 0.95));
    return std::clamp(v_est / v_tune, 0.05, 5.0);
  }
};

class PidController final : public Controller {
 public:
  PidController(PidGains gains, PidOptions opt, SpeedSchedule sched = {})
      : opt_(opt), sched_(sched) {
    state_.gains = gains;
  }
  double step(double lambda, double lambda_ref, double w, double dt) override {
    return pid_step(state_, lambda_ref - lambda, dt, opt_, sched_.factor(lambda, w));
  }
  void reset() override {
    const PidGains g = state_.gains;
    state_ = PidState{};
    state_.gains = g;
  }
  const PidState& state() const { return state_; }

 private:
  PidState state_;
  PidOptions opt_;
  SpeedSchedule sched_;
};

// ---------------------------------------------------------------- relay autotune

struct RelayExperimentResult {
  double k_u = 0.0;
  double p_u = 0.0;
  double amplitude = 0.0;
  bool converged = false;
};

struct RelayOptions {
  double amplitude = 75.0;  // relay half-swing d
  double bias = 0.0;        // nominal input u0
  double setpoint = 0.0;
  double max_time = 5.0;
  int periods = 5;
  double period_tol = 0.02;
  double amplitude_tol = 0.05;
};

// Loop requirements: double output() const; void step(double u); double dt() const.
// Output must increase with input (u = u0 + d while below the setpoint).
template <class Loop>
RelayExperimentResult relay_autotune(Loop& loop, const RelayOptions& opt) {
  if (!(opt.amplitude > 0)) throw ConfigError("relay amplitude must be positive");
  const double dt = loop.dt();
  std::vector<double> periods, amps;
  double t = 0.0, y_prev = loop.output(), last_up = -1.0;
  double hi = -INFINITY, lo = INFINITY;
  const double sp = opt.setpoint;
  while (t < opt.max_time) {
    const double u = opt.bias + (y_prev < sp ? opt.amplitude : -opt.amplitude);
    loop.step(u);
    t += dt;
    const double y = loop.output();
    hi = std::max(hi, y);
    lo = std::min(lo, y);
    if (y_prev < sp && y >= sp) {
      const double tc = t - dt + dt * (sp - y_prev) / (y - y_prev);
      if (last_up >= 0.0) {
        periods.push_back(tc - last_up);
        amps.push_back(0.5 * (hi - lo));
        const auto n = static_cast<std::size_t>(opt.periods);
        if (periods.size() >= n) {
          // variation: largest relative deviation from the window mean
          const auto spread = [n](const std::vector<double>& xs, double& mean) {
            mean = 0.0;
            for (auto it = xs.end() - n; it != xs.end(); ++it) mean += *it / n;
            double dev = 0.0;
            for (auto it = xs.end() - n; it != xs.end(); ++it) dev = std::max(dev, std::abs(*it - mean));
            return dev / mean;
          };
          double pm = 0.0, am = 0.0;
          const double pv = spread(periods, pm), av = spread(amps, am);
          if (am > 0.0 && pv < opt.period_tol && av < opt.amplitude_tol)
            return {4.0 * opt.amplitude / (std::numbers::pi * am), pm, am, true};
        }
      }
      last_up = tc;
      hi = y;
      lo = y;
    }
    y_prev = y;
  }
  return {};
}

enum class ZnRule { Classic, SomeOvershoot, NoOvershoot };

inline ZnRule parse_zn_rule(const std::string& s) {
  if (s == "classic") return ZnRule::Classic;
  if (s == "some-overshoot") return ZnRule::SomeOvershoot;
  if (s == "no-overshoot") return ZnRule::NoOvershoot;
  throw ConfigError("unknown tuning rule '" + s + "'");
}

inline PidGains zn_pid_from_relay(const RelayExperimentResult& r, ZnRule rule = ZnRule::Classic) {
  if (!r.converged) throw ConfigError("relay experiment did not converge");
  double a = 0.6, ti = 0.5, td = 0.125;
  if (rule == ZnRule::SomeOvershoot) a = 0.33, ti = 0.5, td = 1.0 / 3.0;
  if (rule == ZnRule::NoOvershoot) a = 0.2, ti = 0.5, td = 1.0 / 3.0;
  const double kp = a * r.k_u;
  return {kp, kp / (ti * r.p_u), kp * td * r.p_u};
}

// Slip loop at constant speed with the actuator in the path; the relay's plant.
class FrozenSlipLoop {
 public:
  FrozenSlipLoop(VehicleParams p, ActuatorParams act, RoadSurface surf, double v, double lambda0,
                 double T0, double dt)
      : p_(p), act_(act), surf_(std::move(surf)), dt_(dt), st_(make_state(v, lambda0, T0, p_, act_, dt)) {}
  double output() const { return slip_of(st_.v, st_.w, p_.r); }
  void step(double u) { integrate_step(st_, u, p_, act_, surf_, dt_, true); }
  double dt() const { return dt_; }
  const PlantState& state() const { return st_; }

 private:
  VehicleParams p_;
  ActuatorParams act_;
  RoadSurface surf_;
  double dt_;
  PlantState st_;
};

// Linearized slip dynamics about (lambda_bar, Psi(lambda_bar)) with the same actuator.
class LinearSlipLoop {
 public:
  LinearSlipLoop(const VehicleParams& p, ActuatorParams act, const RoadSurface& surf, double v,
                 double lambda_bar, double dt)
      : act_(act), tf_(linearize_slip(lambda_bar, v, p, surf)), lambda_bar_(lambda_bar),
        T0_(psi(lambda_bar, p, surf)), dt_(dt), st_(make_state(v, lambda_bar, T0_, p, act, dt)) {}
  double output() const { return lambda_bar_ + dl_; }
  void step(double u) {
    const double a = tf_.pole, b = tf_.gain_num, dT = st_.Tb_applied - T0_;
    const double e = std::exp(a * dt_);
    dl_ = e * dl_ + (a != 0.0 ? (e - 1.0) / a : dt_) * b * dT;
    actuator_step(u, st_, act_, dt_);
  }
  double dt() const { return dt_; }
  const FirstOrderTf& tf() const { return tf_; }

 private:
  ActuatorParams act_;
  FirstOrderTf tf_;
  double lambda_bar_, T0_, dt_;
  PlantState st_;
  double dl_ = 0.0;
};

// |G_lambda(jw) * w_act/(jw + w_act)|; the pure delay does not change the magnitude.
inline double loop_magnitude(const FirstOrderTf& g, const ActuatorParams& act, double omega) {
  const std::complex<double> s(0.0, omega);
  std::complex<double> v = g(s);
  if (std::isfinite(act.w_act)) v *= act.w_act / (s + act.w_act);
  return std::abs(v);
}

// ---------------------------------------------------------------- Lyapunov adaptive law

struct LyapunovState {
  double theta = 750.0;
  double k_lambda = 1.0;
  double Tb_min = 0.0;
  double Tb_max = 1500.0;
  double J = 1.0;
  bool near_lock = false;

  void validate() const {
    if (!(Tb_min < Tb_max)) throw ConfigError("lyapunov: Tb_min < Tb_max required");
    if (!(k_lambda > 0)) throw ConfigError("lyapunov: k_lambda must be positive");
    if (!(theta > Tb_min && theta < Tb_max)) throw DomainError("lyapunov: theta must be strictly inside bounds");
  }
};

inline double lyapunov_tau(double theta_bar, const LyapunovState& st) {
  const double tau = (theta_bar - st.Tb_max) / (st.Tb_max - st.Tb_min);
  if (!(tau > -1.0 && tau < 0.0)) throw DomainError("tau outside (-1, 0): theta_bar not inside torque bounds");
  return tau;
}

inline double lyapunov_value(double lambda, double theta, double lambda_bar, const LyapunovState& st,
                             double theta_bar, double c) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("lyapunov: slip outside [0, 1)");
  if (!(theta > st.Tb_min && theta < st.Tb_max)) throw DomainError("lyapunov: theta at or beyond barrier");
  const double tau = lyapunov_tau(theta_bar, st);
  return -lambda + (lambda_bar - 1.0) * std::log1p(-lambda) + tau / st.k_lambda * std::log(st.Tb_max - theta) -
         (tau + 1.0) / st.k_lambda * std::log(theta - st.Tb_min) + c;
}

// Offset placing the minimum value W(lambda_bar, theta_bar) at zero.
inline double lyapunov_offset(double lambda_bar, double theta_bar, const LyapunovState& st) {
  return -lyapunov_value(lambda_bar, theta_bar, lambda_bar, st, theta_bar, 0.0);
}

struct LyapunovGradient {
  double d_lambda;
  double d_theta;
};

inline LyapunovGradient lyapunov_gradient(double lambda, double theta, double lambda_bar,
                                          const LyapunovState& st, double theta_bar) {
  const double tau = lyapunov_tau(theta_bar, st);
  return {(lambda - lambda_bar) / (1.0 - lambda),
          -tau / st.k_lambda / (st.Tb_max - theta) - (tau + 1.0) / st.k_lambda / (theta - st.Tb_min)};
}

// Adaptive torque law. With lambda and w held over the step the logistic ODE
// k (lambda - lambda_bar)(theta - Tb_max)(theta - Tb_min)/(J w) has a closed-form solution,
// so the update is exact and theta cannot cross a bound.
inline double lyapunov_step(LyapunovState& st, double lambda, double lambda_bar, double w, double dt) {
  if (w <= kWEps) {
    st.near_lock = true;
    return st.theta;
  }
  st.near_lock = false;
  if (lambda == lambda_bar) return st.theta;
  const double span = st.Tb_max - st.Tb_min;
  const double rate = st.k_lambda * (lambda - lambda_bar) / (st.J * w);
  const double log_odds = std::log(st.Tb_max - st.theta) - std::log(st.theta - st.Tb_min) + rate * span * dt;
  double theta = st.Tb_min + span / (1.0 + std::exp(log_odds));
  // keep a relative margin so theta can leave the barrier again after a lock episode
  const double margin = 1e-9 * span;
  theta = std::clamp(theta, st.Tb_min + margin, st.Tb_max - margin);
  if (std::isfinite(theta)) st.theta = theta;
  return st.theta;
}

// Tuning rule for k_lambda relative to a proportional damping gain kd: the adaptation
// bandwidth is a fraction rho of the damped slip loop bandwidth at lambda_bar.
inline double tuned_k_lambda(double lambda_bar, double theta_bar, double damping, double rho,
                             const TorqueBounds& b) {
  const double g = (b.max - theta_bar) * (theta_bar - b.min);
  if (!(g > 0)) throw DomainError("theta_bar outside torque bounds");
  return rho * damping * damping * (1.0 - lambda_bar) / g;
}

struct LyapunovOptions {
  double k_lambda = 1.0;
  double damping = 0.0;  // N m per unit slip, proportional term around theta
  double theta0 = 750.0;
  TorqueBounds bounds;
  double J = 1.0;
};

// Output Tb = clamp(theta - damping (lambda - lambda_ref)); damping = 0 is the bare law.
class LyapunovController final : public Controller {
 public:
  explicit LyapunovController(LyapunovOptions opt) : opt_(opt) { reset(); }
  double step(double lambda, double lambda_ref, double w, double dt) override {
    const double theta = lyapunov_step(st_, lambda, lambda_ref, w, dt);
    return opt_.bounds.clamp(theta - opt_.damping * (lambda - lambda_ref));
  }
  void reset() override {
    st_ = LyapunovState{opt_.theta0, opt_.k_lambda, opt_.bounds.min, opt_.bounds.max, opt_.J, false};
    st_.validate();
  }
  const LyapunovState& state() const { return st_; }
  const LyapunovOptions& options() const { return opt_; }

 private:
  LyapunovOptions opt_;
  LyapunovState st_;
};

}  // namespace abslab
