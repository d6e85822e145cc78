#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "abslab/errors.hpp"
#include "abslab/scenario.hpp"

namespace abslab {

using nlohmann::json;

namespace detail {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline double read_number_or_inf(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("expected number or \"inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

inline json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

inline MembershipFunction membership_from_json(const json& j) {
  MembershipFunction f;
  f.label = j.at("name").get<std::string>();
  f.kind = parse_membership_kind(j.at("kind").get<std::string>());
  f.center = j.at("center").get<double>();
  f.left_foot = j.at("left_foot").get<double>();
  f.right_foot = j.at("right_foot").get<double>();
  f.validate();
  return f;
}

}  // namespace detail

// Parses a scenario document. Relative surface-file paths resolve against base_dir.
inline Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  try {
    Scenario sc;
    detail::read(j, "name", sc.name);

    if (!j.contains("surfaces")) {
#ifdef ABSLAB_DATA_DIR
      sc.surfaces = load_surfaces(default_surface_file());
#else
      throw ConfigError("no surfaces given");
#endif
    } else if (j.at("surfaces").is_string()) {
      std::filesystem::path sp = j.at("surfaces").get<std::string>();
      if (sp.is_relative() && !base_dir.empty() && !std::filesystem::exists(sp)) sp = base_dir / sp;
      sc.surfaces = load_surfaces(sp.string());
    } else {
      sc.surfaces = parse_surfaces(j.at("surfaces"));
    }

    if (j.contains("vehicle")) {
      const json& v = j.at("vehicle");
      detail::read(v, "m", sc.vehicle.m);
      detail::read(v, "J", sc.vehicle.J);
      detail::read(v, "r", sc.vehicle.r);
      detail::read(v, "g", sc.vehicle.g);
      if (v.contains("Fz") && !v.at("Fz").is_null()) sc.vehicle.Fz_override = v.at("Fz").get<double>();
    }
    if (j.contains("actuator")) {
      const json& a = j.at("actuator");
      if (a.contains("w_act")) sc.actuator.w_act = detail::read_number_or_inf(a.at("w_act"));
      detail::read(a, "delay", sc.actuator.delay);
      detail::read(a, "Tb_min", sc.actuator.Tb_min);
      detail::read(a, "Tb_max", sc.actuator.Tb_max);
    }
    if (j.contains("simulation")) {
      const json& s = j.at("simulation");
      detail::read(s, "initial_speed", sc.initial_speed);
      detail::read(s, "initial_slip", sc.initial_slip);
      detail::read(s, "duration", sc.duration);
      detail::read(s, "dt", sc.dt);
      detail::read(s, "frozen_v", sc.frozen_v);
      detail::read(s, "speed_floor", sc.speed_floor);
      detail::read(s, "tolerance", sc.tolerance);
    }

    ControllerSpec& cs = sc.controller;
    if (j.contains("controller")) {
      const json& c = j.at("controller");
      detail::read(c, "type", cs.type);
      detail::read(c, "blend", cs.blend);
      detail::read(c, "tuned_for", cs.tuned_for);
      if (c.contains("pid")) {
        const json& p = c.at("pid");
        if (p.contains("gains") && !p.at("gains").is_null()) {
          const json& g = p.at("gains");
          cs.gains = PidGains{g.at("kp").get<double>(), g.at("ki").get<double>(), g.at("kd").get<double>()};
        }
        detail::read(p, "autotune_speed", cs.autotune_speed);
        detail::read(p, "relay_fraction", cs.relay_fraction);
        detail::read(p, "autotune_max_time", cs.autotune_max_time);
        detail::read(p, "rule", cs.zn_rule);
        detail::read(p, "speed_schedule", cs.speed_schedule);
        detail::read(p, "anti_windup", cs.anti_windup);
      }
      if (c.contains("lyapunov")) {
        const json& l = c.at("lyapunov");
        if (l.contains("k_lambda") && !l.at("k_lambda").is_null()) cs.k_lambda = l.at("k_lambda").get<double>();
        if (l.contains("theta0") && !l.at("theta0").is_null()) cs.theta0 = l.at("theta0").get<double>();
        detail::read(l, "damping", cs.damping);
        detail::read(l, "adaptation_ratio", cs.adaptation_ratio);
      }
    }

    if (j.contains("fuzzy")) {
      const json& fz = j.at("fuzzy");
      bool explicit_params = false;
      std::vector<std::pair<std::string, std::optional<MembershipFunction>>> entries;
      for (const auto& e : fz.at("surfaces")) {
        if (e.is_string()) {
          entries.emplace_back(e.get<std::string>(), std::nullopt);
        } else if (e.contains("kind")) {
          explicit_params = true;
          auto f = detail::membership_from_json(e);
          entries.emplace_back(f.label, f);
        } else {
          entries.emplace_back(e.at("name").get<std::string>(), std::nullopt);
        }
      }
      for (const auto& [name, f] : entries) cs.bank.push_back(name);
      if (explicit_params) {
        std::vector<RoadSurface> members;
        for (const auto& name : cs.bank) members.push_back(find_surface(sc.surfaces, name));
        cs.memberships = make_default_bank(members);
        for (auto& m : cs.memberships)
          for (const auto& [name, f] : entries)
            if (f && name == m.label) m = *f;
      }
    }

    if (j.contains("surface_timeline")) {
      for (const auto& e : j.at("surface_timeline"))
        sc.surface_timeline.emplace_back(e.at("time").get<double>(), e.at("surface").get<std::string>());
    } else {
      sc.surface_timeline.emplace_back(0.0, sc.surfaces.front().name);
    }

    if (j.contains("lambda_opt_signal")) {
      const json& s = j.at("lambda_opt_signal");
      if (s.is_string()) {
        if (s.get<std::string>() != "truth") throw ConfigError("lambda_opt_signal must be \"truth\" or a list");
      } else {
        std::vector<std::pair<double, double>> sig;
        for (const auto& e : s) sig.emplace_back(e.at("time").get<double>(), e.at("value").get<double>());
        if (sig.empty()) throw ConfigError("lambda_opt_signal list is empty");
        sc.lambda_opt_signal = std::move(sig);
      }
    }

    if (j.contains("events")) {
      for (const auto& e : j.at("events")) {
        Event ev;
        ev.time = e.at("time").get<double>();
        const auto kind = e.at("kind").get<std::string>();
        if (kind == "reference_step") {
          ev.kind = Event::Kind::ReferenceStep;
          const json& v = e.at("value");
          if (v.is_string()) {
            if (v.get<std::string>() != "opt") throw ConfigError("reference value must be a slip or \"opt\"");
            ev.value_is_opt = true;
          } else {
            ev.value = v.get<double>();
          }
        } else if (kind == "torque_disturbance") {
          ev.kind = Event::Kind::TorqueDisturbance;
          ev.value = e.at("value").get<double>();
          ev.duration = e.value("duration", 0.2);
        } else if (kind == "surface_switch") {
          ev.kind = Event::Kind::SurfaceSwitch;
          ev.label = e.at("surface").get<std::string>();
        } else {
          throw ConfigError("unknown event kind '" + kind + "'");
        }
        sc.events.push_back(ev);
      }
    }

    if (j.contains("noise")) {
      detail::read(j.at("noise"), "slip_sigma", sc.noise.slip_sigma);
      detail::read(j.at("noise"), "seed", sc.noise.seed);
    }
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// Fully resolved document; parsing it back gives the same scenario.
inline json scenario_to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  json surfs = json::array();
  for (const auto& s : sc.surfaces)
    surfs.push_back({{"name", s.name}, {"theta1", s.theta1}, {"theta2", s.theta2}, {"theta3", s.theta3}});
  j["surfaces"] = surfs;
  j["vehicle"] = {{"m", sc.vehicle.m}, {"J", sc.vehicle.J}, {"r", sc.vehicle.r}, {"g", sc.vehicle.g},
                  {"Fz", sc.vehicle.Fz_override ? json(*sc.vehicle.Fz_override) : json(nullptr)}};
  j["actuator"] = {{"w_act", detail::number_or_inf(sc.actuator.w_act)},
                   {"delay", sc.actuator.delay},
                   {"Tb_min", sc.actuator.Tb_min},
                   {"Tb_max", sc.actuator.Tb_max}};
  j["simulation"] = {{"initial_speed", sc.initial_speed}, {"initial_slip", sc.initial_slip},
                     {"duration", sc.duration},           {"dt", sc.dt},
                     {"frozen_v", sc.frozen_v},           {"speed_floor", sc.speed_floor},
                     {"tolerance", sc.tolerance}};
  const ControllerSpec& cs = sc.controller;
  json pid = {{"autotune_speed", cs.autotune_speed}, {"relay_fraction", cs.relay_fraction},
              {"autotune_max_time", cs.autotune_max_time}, {"rule", cs.zn_rule},
              {"speed_schedule", cs.speed_schedule}, {"anti_windup", cs.anti_windup}};
  pid["gains"] = cs.gains ? json{{"kp", cs.gains->kp}, {"ki", cs.gains->ki}, {"kd", cs.gains->kd}} : json(nullptr);
  json lyap = {{"damping", cs.damping}, {"adaptation_ratio", cs.adaptation_ratio}};
  lyap["k_lambda"] = cs.k_lambda ? json(*cs.k_lambda) : json(nullptr);
  lyap["theta0"] = cs.theta0 ? json(*cs.theta0) : json(nullptr);
  j["controller"] = {{"type", cs.type}, {"blend", cs.blend}, {"tuned_for", cs.tuned_for}, {"pid", pid},
                     {"lyapunov", lyap}};
  if (!cs.bank.empty() || !cs.memberships.empty()) {
    json list = json::array();
    if (!cs.memberships.empty()) {
      for (const auto& f : cs.memberships)
        list.push_back({{"name", f.label}, {"kind", to_string(f.kind)}, {"center", f.center},
                        {"left_foot", f.left_foot}, {"right_foot", f.right_foot}});
    } else {
      for (const auto& name : cs.bank) list.push_back(name);
    }
    j["fuzzy"] = {{"surfaces", list}};
  }
  json tl = json::array();
  for (const auto& [t, name] : sc.surface_timeline) tl.push_back({{"time", t}, {"surface", name}});
  j["surface_timeline"] = tl;
  if (sc.lambda_opt_signal) {
    json sig = json::array();
    for (const auto& [t, v] : *sc.lambda_opt_signal) sig.push_back({{"time", t}, {"value", v}});
    j["lambda_opt_signal"] = sig;
  } else {
    j["lambda_opt_signal"] = "truth";
  }
  json ev = json::array();
  for (const auto& e : sc.events) {
    switch (e.kind) {
      case Event::Kind::ReferenceStep:
        ev.push_back({{"time", e.time}, {"kind", "reference_step"},
                      {"value", e.value_is_opt ? json("opt") : json(e.value)}});
        break;
      case Event::Kind::TorqueDisturbance:
        ev.push_back({{"time", e.time}, {"kind", "torque_disturbance"}, {"value", e.value}, {"duration", e.duration}});
        break;
      case Event::Kind::SurfaceSwitch:
        ev.push_back({{"time", e.time}, {"kind", "surface_switch"}, {"surface", e.label}});
        break;
    }
  }
  j["events"] = ev;
  j["noise"] = {{"slip_sigma", sc.noise.slip_sigma}, {"seed", sc.noise.seed}};
  return j;
}

// 64-bit FNV-1a, stable across platforms and runs.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const json& canonical) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical.dump())));
  return buf;
}

inline json make_manifest(const json& canonical, std::uint64_t seed, const std::string& command) {
  json m;
  m["tool"] = "abslab";
#ifdef ABSLAB_VERSION
  m["version"] = ABSLAB_VERSION;
#endif
  m["command"] = command;
  m["config_hash"] = config_hash(canonical);
  m["seed"] = seed;
  m["config"] = canonical;
  return m;
}

struct LoadedConfig {
  json document;
  std::filesystem::path base_dir;
};

// Accepts a path, a bare name found in the bundled configs directory, or a manifest.
inline LoadedConfig load_config(const std::string& path_or_name) {
  std::filesystem::path p = path_or_name;
#ifdef ABSLAB_CONFIG_DIR
  if (!std::filesystem::exists(p)) {
    const std::filesystem::path named = std::filesystem::path(ABSLAB_CONFIG_DIR) / (path_or_name + ".json");
    if (std::filesystem::exists(named)) p = named;
  }
#endif
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config: " + path_or_name);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("config_hash") && j.contains("config")) j = j.at("config");
  return {j, p.parent_path()};
}

}  // namespace abslab
