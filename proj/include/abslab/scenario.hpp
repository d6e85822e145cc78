#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "abslab/analysis.hpp"
#include "abslab/controllers.hpp"
#include "abslab/csv.hpp"
#include "abslab/errors.hpp"
#include "abslab/friction.hpp"
#include "abslab/fuzzy.hpp"
#include "abslab/plant.hpp"

namespace abslab {

struct ControllerSpec {
  std::string type = "pid";  // pid | lyapunov
  bool blend = false;
  std::string tuned_for;           // single mode; defaults to the initial surface
  std::vector<std::string> bank;   // blend mode; defaults to every loaded surface
  MembershipBank memberships;      // blend mode; defaults to make_default_bank

  // pid
  std::optional<PidGains> gains;  // explicit gains skip the relay experiment
  double autotune_speed = 20.0;
  double relay_fraction = 0.05;   // relay amplitude as a fraction of Tb_max
  double autotune_max_time = 5.0;
  std::string zn_rule = "classic";
  bool speed_schedule = true;
  bool anti_windup = true;

  // lyapunov
  std::optional<double> k_lambda;  // default: tuned_k_lambda(lambda_opt, Psi(lambda_opt), damping, adaptation_ratio)
  double damping = 1000.0;
  double adaptation_ratio = 0.375;
  std::optional<double> theta0;    // default: Psi(lambda_opt) of the tuned surface
};

struct Event {
  enum class Kind { ReferenceStep, TorqueDisturbance, SurfaceSwitch };
  double time = 0.0;
  Kind kind = Kind::ReferenceStep;
  double value = 0.0;       // slip for a reference step, N m for a disturbance
  bool value_is_opt = false;  // reference follows the optimal slip
  double duration = 0.0;
  std::string label;
};

struct NoiseSpec {
  double slip_sigma = 0.0;
  std::uint64_t seed = 1;
};

struct Scenario {
  std::string name = "scenario";
  VehicleParams vehicle;
  ActuatorParams actuator;
  std::vector<RoadSurface> surfaces;
  double initial_speed = 20.0;
  double initial_slip = 0.0;
  double duration = 10.0;
  double dt = 1e-3;
  ControllerSpec controller;
  std::vector<std::pair<double, std::string>> surface_timeline;
  std::optional<std::vector<std::pair<double, double>>> lambda_opt_signal;  // empty: truth
  std::vector<Event> events;
  NoiseSpec noise;
  bool frozen_v = false;
  double speed_floor = 5.0;  // tracking metrics ignore v below this
  double tolerance = 0.01;   // settle band

  void validate() const {
    vehicle.validate();
    actuator.validate();
    actuator.delay_steps(dt);
    if (!(duration > 0)) throw ConfigError("duration must be positive");
    if (!(initial_speed > 0)) throw ConfigError("initial_speed must be positive");
    if (!(initial_slip >= 0 && initial_slip < 1)) throw ConfigError("initial_slip must be in [0, 1)");
    if (surfaces.empty()) throw ConfigError("no surfaces loaded");
    if (surface_timeline.empty() || surface_timeline.front().first != 0.0)
      throw ConfigError("surface_timeline must start at t = 0");
    for (const auto& [t, name] : surface_timeline) find_surface(surfaces, name);
    for (const auto& e : events) {
      if (!(e.time >= 0 && e.time <= duration)) throw ConfigError("event time outside [0, duration]");
      if (e.kind == Event::Kind::ReferenceStep && !e.value_is_opt && !(e.value >= 0 && e.value < 1))
        throw ConfigError("reference slip must be in [0, 1)");
      if (e.kind == Event::Kind::TorqueDisturbance && !(e.duration >= 0))
        throw ConfigError("disturbance duration must be non-negative");
      if (e.kind == Event::Kind::SurfaceSwitch) find_surface(surfaces, e.label);
    }
    if (!(noise.slip_sigma >= 0)) throw ConfigError("noise sigma must be non-negative");
    if (controller.type != "pid" && controller.type != "lyapunov")
      throw ConfigError("controller type must be pid or lyapunov");
    parse_zn_rule(controller.zn_rule);
  }

  std::size_t steps() const {
    const double n = std::round(duration / dt);
    return static_cast<std::size_t>(n);
  }
};

struct Trace {
  std::vector<std::string> weight_labels;
  bool has_lyapunov = false;
  std::vector<double> t, v, w, lambda, lambda_ref, mu, Tb_cmd, Tb_applied;
  std::vector<std::vector<double>> weights;  // per row
  std::vector<double> W_lyap;
  // not exported
  std::vector<double> x, lambda_opt_true;
  std::vector<char> active;

  std::size_t size() const { return t.size(); }

  std::vector<std::string> columns() const {
    std::vector<std::string> c{"t", "v", "w", "lambda", "lambda_ref", "mu", "Tb_cmd", "Tb_applied"};
    for (const auto& l : weight_labels) c.push_back("weight_" + l);
    if (has_lyapunov) c.push_back("W_lyap");
    return c;
  }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> r{t[i], v[i], w[i], lambda[i], lambda_ref[i], mu[i], Tb_cmd[i], Tb_applied[i]};
    if (!weight_labels.empty()) r.insert(r.end(), weights[i].begin(), weights[i].end());
    if (has_lyapunov) r.push_back(W_lyap[i]);
    return r;
  }

  void write_csv(std::ostream& os) const {
    write_csv_header(os, columns());
    for (std::size_t i = 0; i < size(); ++i) write_csv_row(os, row(i));
  }
};

struct Metrics {
  double iae = 0.0;
  double iae_opt = 0.0;
  double settle_time = INFINITY;
  double overshoot = 0.0;
  double stop_distance = 0.0;
  double stop_time = 0.0;
  double cmd_variance = 0.0;
  bool stopped = false;

  static std::vector<std::string> columns() {
    return {"iae", "iae_opt", "settle_time", "overshoot", "stop_distance", "stop_time", "cmd_variance", "stopped"};
  }
  std::vector<double> values() const {
    return {iae, iae_opt, settle_time, overshoot, stop_distance, stop_time, cmd_variance, stopped ? 1.0 : 0.0};
  }
  void write_csv(std::ostream& os) const {
    write_csv_header(os, columns());
    write_csv_row(os, values());
  }
};

struct RunOutput {
  Trace trace;
  Metrics metrics;
};

// Numerical fault during a run; carries the rows recorded before the fault.
class ScenarioFault : public NumericalFault {
 public:
  ScenarioFault(const std::string& what, Trace partial)
      : NumericalFault(what), partial_(std::make_shared<Trace>(std::move(partial))) {}
  const Trace& partial() const { return *partial_; }

 private:
  std::shared_ptr<Trace> partial_;
};

// ---------------------------------------------------------------- controller construction

inline PidGains autotune_gains(const Scenario& sc, const RoadSurface& surf) {
  const ControllerSpec& cs = sc.controller;
  const double lb = lambda_opt(surf);
  const double T0 = psi(lb, sc.vehicle, surf);
  FrozenSlipLoop loop(sc.vehicle, sc.actuator, surf, cs.autotune_speed, lb, T0, sc.dt);
  RelayOptions ro;
  ro.amplitude = cs.relay_fraction * sc.actuator.Tb_max;
  ro.bias = T0;
  ro.setpoint = lb;
  ro.max_time = cs.autotune_max_time;
  const RelayExperimentResult r = relay_autotune(loop, ro);
  if (!r.converged) throw ConfigError("relay autotune did not converge on surface '" + surf.name + "'");
  return zn_pid_from_relay(r, parse_zn_rule(cs.zn_rule));
}

inline LyapunovOptions lyapunov_options(const Scenario& sc, const RoadSurface& surf) {
  const ControllerSpec& cs = sc.controller;
  const TorqueBounds b{sc.actuator.Tb_min, sc.actuator.Tb_max};
  const double lb = lambda_opt(surf);
  const double theta_bar = psi(lb, sc.vehicle, surf);
  LyapunovOptions o;
  o.bounds = b;
  o.J = sc.vehicle.J;
  o.damping = cs.damping;
  o.theta0 = cs.theta0.value_or(theta_bar);
  o.k_lambda = cs.k_lambda ? *cs.k_lambda
               : cs.damping > 0 ? tuned_k_lambda(lb, theta_bar, cs.damping, cs.adaptation_ratio, b)
                                : 1.0;
  return o;
}

inline std::unique_ptr<Controller> build_controller(const Scenario& sc, const RoadSurface& surf) {
  const ControllerSpec& cs = sc.controller;
  const TorqueBounds b{sc.actuator.Tb_min, sc.actuator.Tb_max};
  if (cs.type == "lyapunov") return std::make_unique<LyapunovController>(lyapunov_options(sc, surf));
  const PidGains g = cs.gains ? *cs.gains : autotune_gains(sc, surf);
  return std::make_unique<PidController>(g, PidOptions{b, cs.anti_windup},
                                         SpeedSchedule{cs.speed_schedule, cs.autotune_speed, sc.vehicle.r});
}

// ---------------------------------------------------------------- metrics

inline Metrics compute_metrics(const Trace& tr, const Scenario& sc) {
  Metrics m;
  const std::size_t n = tr.size();
  if (n == 0) return m;
  m.stop_distance = tr.x.back();
  m.stop_time = tr.t.back();
  m.stopped = tr.v.back() < kVEps;

  std::vector<std::size_t> win;
  for (std::size_t i = 0; i < n; ++i)
    if (tr.active[i] && tr.v[i] >= sc.speed_floor) win.push_back(i);
  if (win.empty()) {
    m.settle_time = NAN;
    return m;
  }
  double t_on = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (tr.active[i]) {
      t_on = tr.t[i];
      break;
    }
  double mean = 0.0;
  for (std::size_t k = 0; k < win.size(); ++k) {
    const std::size_t i = win[k];
    const double e = std::abs(tr.lambda[i] - tr.lambda_ref[i]);
    m.overshoot = std::max(m.overshoot, tr.lambda[i] - tr.lambda_ref[i]);
    mean += tr.Tb_cmd[i];
    if (k > 0 && win[k - 1] + 1 == i) {
      const std::size_t j = i - 1;
      const double h = tr.t[i] - tr.t[j];
      m.iae += 0.5 * h * (e + std::abs(tr.lambda[j] - tr.lambda_ref[j]));
      m.iae_opt += 0.5 * h * (std::abs(tr.lambda[i] - tr.lambda_opt_true[i]) +
                              std::abs(tr.lambda[j] - tr.lambda_opt_true[j]));
    }
  }
  mean /= static_cast<double>(win.size());
  for (std::size_t i : win) m.cmd_variance += (tr.Tb_cmd[i] - mean) * (tr.Tb_cmd[i] - mean);
  m.cmd_variance /= static_cast<double>(win.size());

  std::size_t first_ok = 0;
  bool any_bad = false;
  for (std::size_t k = 0; k < win.size(); ++k)
    if (!(std::abs(tr.lambda[win[k]] - tr.lambda_ref[win[k]]) < sc.tolerance)) {
      first_ok = k + 1;
      any_bad = true;
    }
  if (!any_bad) m.settle_time = tr.t[win.front()] - t_on;
  else if (first_ok < win.size()) m.settle_time = tr.t[win[first_ok]] - t_on;
  return m;
}

// ---------------------------------------------------------------- run

namespace detail {

inline double hold_value(const std::vector<std::pair<double, double>>& sig, double t) {
  double v = sig.front().second;
  for (const auto& [ti, vi] : sig)
    if (t >= ti - 1e-12) v = vi;
  return v;
}

}  // namespace detail

inline RunOutput run(const Scenario& sc) {
  sc.validate();
  const VehicleParams& p = sc.vehicle;
  const ActuatorParams& act = sc.actuator;
  const ControllerSpec& cs = sc.controller;
  const double dt = sc.dt;
  const double t_eps = 1e-9 * dt;

  auto timeline = sc.surface_timeline;
  for (const auto& e : sc.events)
    if (e.kind == Event::Kind::SurfaceSwitch) timeline.emplace_back(e.time, e.label);
  std::stable_sort(timeline.begin(), timeline.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<double, const RoadSurface*>> surf_at;
  for (const auto& [t, name] : timeline) surf_at.emplace_back(t, &find_surface(sc.surfaces, name));

  // controllers
  std::vector<std::unique_ptr<Controller>> ctrls;
  std::vector<const RoadSurface*> ctrl_surf;
  MembershipBank bank;
  std::vector<double> bank_lopt;
  if (cs.blend) {
    std::vector<RoadSurface> members;
    if (cs.bank.empty()) members = sc.surfaces;
    else
      for (const auto& name : cs.bank) members.push_back(find_surface(sc.surfaces, name));
    bank = cs.memberships.empty() ? make_default_bank(members) : cs.memberships;
    for (auto& f : bank) f.validate();
    for (const auto& f : bank) {
      const RoadSurface& s = find_surface(sc.surfaces, f.label);
      ctrl_surf.push_back(&s);
      ctrls.push_back(build_controller(sc, s));
      bank_lopt.push_back(lambda_opt(s));
    }
  } else {
    const RoadSurface& s = find_surface(sc.surfaces, cs.tuned_for.empty() ? timeline.front().second : cs.tuned_for);
    ctrl_surf.push_back(&s);
    ctrls.push_back(build_controller(sc, s));
  }
  const auto* lyap = !cs.blend ? dynamic_cast<const LyapunovController*>(ctrls.front().get()) : nullptr;

  Trace tr;
  for (const auto& f : bank) tr.weight_labels.push_back(f.label);
  tr.has_lyapunov = lyap != nullptr;

  auto events = sc.events;
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
  std::size_t next_event = 0;

  PlantState st = make_state(sc.initial_speed, sc.initial_slip, act.Tb_min, p, act, dt);
  std::mt19937_64 rng(sc.noise.seed);
  std::normal_distribution<double> noise(0.0, sc.noise.slip_sigma > 0 ? sc.noise.slip_sigma : 1.0);

  const RoadSurface* surf = surf_at.front().second;
  std::size_t next_surf = 1;
  bool braking = false, ref_opt = false;
  double ref_value = 0.0;
  struct Disturbance {
    double start, end, value;
  };
  std::vector<Disturbance> dists;

  const std::size_t N = sc.steps();
  std::vector<double> commands(ctrls.size());
  for (std::size_t k = 0; k <= N; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (next_surf < surf_at.size() && t >= surf_at[next_surf].first - t_eps) surf = surf_at[next_surf++].second;
    for (; next_event < events.size() && t >= events[next_event].time - t_eps; ++next_event) {
      const Event& e = events[next_event];
      if (e.kind == Event::Kind::ReferenceStep) {
        braking = true;
        ref_opt = e.value_is_opt;
        ref_value = e.value;
      } else if (e.kind == Event::Kind::TorqueDisturbance) {
        dists.push_back({e.time, e.time + e.duration, e.value});
      }
    }

    const double lam = slip_of(st.v, st.w, p.r);
    const double lam_meas = sc.noise.slip_sigma > 0 ? lam + noise(rng) : lam;
    const double lopt_true = lambda_opt(*surf);

    RoadWeights rw;
    if (cs.blend) {
      const double est = sc.lambda_opt_signal ? detail::hold_value(*sc.lambda_opt_signal, t) : lopt_true;
      rw = weights(memberships(est, bank), bank);
    }
    double ref = 0.0;
    if (braking) {
      if (!ref_opt) ref = ref_value;
      else ref = cs.blend ? weighted_reference(rw, bank_lopt) : lambda_opt(*ctrl_surf.front());
    }

    double cmd = act.Tb_min;
    if (braking) {
      for (std::size_t i = 0; i < ctrls.size(); ++i) commands[i] = ctrls[i]->step(lam_meas, ref, st.w, dt);
      cmd = cs.blend ? blend(rw, commands) : commands.front();
    }

    double W = NAN;
    if (lyap && braking) {
      const LyapunovState& ls = lyap->state();
      try {
        const double theta_bar = psi(ref, p, *ctrl_surf.front());
        W = lyapunov_value(lam, ls.theta, ref, ls, theta_bar, lyapunov_offset(ref, theta_bar, ls));
      } catch (const DomainError&) {
      }
    }

    tr.t.push_back(t);
    tr.v.push_back(st.v);
    tr.w.push_back(st.w);
    tr.lambda.push_back(lam);
    tr.lambda_ref.push_back(ref);
    tr.mu.push_back(mu(*surf, lam));
    tr.Tb_cmd.push_back(cmd);
    tr.Tb_applied.push_back(st.Tb_applied);
    if (cs.blend) tr.weights.push_back(rw.weights);
    if (lyap) tr.W_lyap.push_back(W);
    tr.x.push_back(st.x);
    tr.lambda_opt_true.push_back(lopt_true);
    tr.active.push_back(braking ? 1 : 0);

    if (k == N || st.v < kVEps) break;

    double dist = 0.0;
    for (const auto& d : dists)
      if (t >= d.start - t_eps && t < d.end - t_eps) dist += d.value;
    try {
      integrate_step(st, cmd + dist, p, act, *surf, dt, sc.frozen_v);
    } catch (const NumericalFault& f) {
      throw ScenarioFault(std::string(f.what()) + " at t=" + format_double(t), std::move(tr));
    }
  }
  Metrics m = compute_metrics(tr, sc);
  return {std::move(tr), m};
}

// ---------------------------------------------------------------- batch

struct BatchResult {
  std::optional<RunOutput> output;
  std::string error;  // empty on success
  bool numerical_fault = false;
};

inline std::vector<BatchResult> batch(const std::vector<Scenario>& scenarios, unsigned threads = 0) {
  std::vector<BatchResult> out(scenarios.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(scenarios.size(), 1)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < scenarios.size();) {
      try {
        out[i].output = run(scenarios[i]);
      } catch (const NumericalFault& e) {
        out[i].error = e.what();
        out[i].numerical_fault = true;
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace abslab
