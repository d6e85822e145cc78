#pragma once
// Scenario builders shared by the unit and acceptance tests.

#include <string>

#include <abslab/scenario.hpp>

#include "oracles.hpp"

namespace fixture {

// Reference step to the optimal slip at t = 1 s, 100 N m for 0.2 s at t = 2 s.
inline abslab::Scenario protocol(const std::string& surface, double v0, const std::string& type) {
  abslab::Scenario sc;
  sc.name = "protocol_" + surface + "_" + std::to_string(static_cast<int>(v0)) + "_" + type;
  sc.surfaces = oracle::presets();
  sc.initial_speed = v0;
  sc.duration = 20.0;
  sc.surface_timeline = {{0.0, surface}};
  sc.controller.type = type;
  abslab::Event ref;
  ref.time = 1.0;
  ref.value_is_opt = true;
  abslab::Event dist;
  dist.time = 2.0;
  dist.kind = abslab::Event::Kind::TorqueDisturbance;
  dist.value = 100.0;
  dist.duration = 0.2;
  sc.events = {ref, dist};
  return sc;
}

// dry -> wet -> snow with the reference following the optimal slip from t = 0.5 s.
inline abslab::Scenario switching(const std::string& type) {
  abslab::Scenario sc;
  sc.name = "switching_" + type;
  sc.surfaces = oracle::presets();
  sc.initial_speed = 30.0;
  sc.duration = 20.0;
  sc.surface_timeline = {{0.0, "dry"}, {1.6, "wet"}, {2.4, "snow"}};
  sc.controller.type = type;
  abslab::Event ref;
  ref.time = 0.5;
  ref.value_is_opt = true;
  sc.events = {ref};
  return sc;
}

inline double first_time_below(const abslab::Trace& tr, double v) {
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.v[i] < v) return tr.t[i];
  return INFINITY;
}

// Last sample time in [t0, t1) with |lambda - target| >= tol; -inf if none.
inline double last_outside(const abslab::Trace& tr, double target, double tol, double t0, double t1) {
  double last = -INFINITY;
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.t[i] >= t0 && tr.t[i] < t1 && !(std::abs(tr.lambda[i] - target) < tol)) last = tr.t[i];
  return last;
}

}  // namespace fixture
